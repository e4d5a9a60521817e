//! CSV and TOML output for a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ComparisonRow, RunResult};
use crate::error::{Error, Result};
use crate::metrics::IlluminanceGrid;

/// Nine significant digits, scientific notation.
pub fn fmt9(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn opt9(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt9)
}

pub fn metrics_csv(r: &RunResult) -> String {
    let mut s = String::from("x_m,y_m,z_m,delay_spread_s,snr_db,best_adr_branch\n");
    for p in &r.positions {
        let (ds, snr, branch) = match p.metrics() {
            Some(m) => (
                fmt9(m.delay_spread),
                fmt9(m.snr_db),
                m.best_branch_index.to_string(),
            ),
            None => ("nan".into(), "nan".into(), "none".into()),
        };
        let _ = writeln!(
            s,
            "{},{},{},{ds},{snr},{branch}",
            fmt9(p.position.x),
            fmt9(p.position.y),
            fmt9(p.position.z)
        );
    }
    s
}

pub fn link_csv(r: &RunResult) -> String {
    let mut s = String::from("x_m,y_m,z_m,p1_w,p0_w,max_rate_bps,unit,branch,iterations,status\n");
    for p in &r.positions {
        let pos = format!(
            "{},{},{}",
            fmt9(p.position.x),
            fmt9(p.position.y),
            fmt9(p.position.z)
        );
        match &p.outcome {
            Ok(o) => {
                let (unit, branch, iters) = match &o.steering {
                    Some(st) => (
                        st.unit.to_string(),
                        st.branch.to_string(),
                        st.iterations().to_string(),
                    ),
                    None => ("none".into(), "none".into(), "0".into()),
                };
                let _ = writeln!(
                    s,
                    "{pos},{},{},{},{unit},{branch},{iters},ok",
                    fmt9(o.metrics.received_power_p1),
                    fmt9(o.metrics.received_power_p0),
                    opt9(o.max_rate)
                );
            }
            Err(e) => {
                let _ = writeln!(
                    s,
                    "{pos},nan,nan,none,none,none,0,\"{}\"",
                    e.replace('"', "'")
                );
            }
        }
    }
    s
}

pub fn rates_csv(r: &RunResult) -> String {
    let mut s = String::from("x_m,y_m,z_m,rate_bps,snr_db\n");
    for p in &r.positions {
        let Ok(o) = &p.outcome else { continue };
        for (rate, snr) in r.rate_grid.iter().zip(&o.snr_by_rate) {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt9(p.position.x),
                fmt9(p.position.y),
                fmt9(p.position.z),
                fmt9(*rate),
                fmt9(*snr)
            );
        }
    }
    s
}

pub fn traces_csv(r: &RunResult) -> String {
    let mut s = String::from(
        "rx_x_m,rx_y_m,rx_z_m,iteration,cell_center_x,cell_center_y,half_width_x,half_width_y,chosen_quadrant,snr_db\n",
    );
    for p in &r.positions {
        let Some(st) = p.outcome.as_ref().ok().and_then(|o| o.steering.as_ref()) else {
            continue;
        };
        for t in &st.trace {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt9(p.position.x),
                fmt9(p.position.y),
                fmt9(p.position.z),
                t.iteration,
                fmt9(t.cell.center.x),
                fmt9(t.cell.center.y),
                fmt9(t.cell.half_width_x),
                fmt9(t.cell.half_width_y),
                t.quadrant.label(),
                fmt9(t.snr_db)
            );
        }
    }
    s
}

pub fn illuminance_csv(r: &RunResult) -> String {
    grid_csv(&r.illuminance_grid)
}

pub fn grid_csv(g: &IlluminanceGrid) -> String {
    let mut s = String::from("x_m,y_m,lux\n");
    for (iy, y) in g.ys.iter().enumerate() {
        for (ix, x) in g.xs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt9(*x),
                fmt9(*y),
                fmt9(g.values[iy * g.xs.len() + ix])
            );
        }
    }
    s
}

pub fn summary_csv(r: &RunResult) -> String {
    let mut s = String::from("key,value\n");
    let mode = match r.mode {
        super::Mode::Steered => "steered",
        super::Mode::Baseline => "baseline",
    };
    let rows = [
        ("version", r.version.clone()),
        ("mode", mode.to_string()),
        ("worst_case_max_rate_bps", opt9(r.worst_case_max_rate)),
        ("flux_scale", fmt9(r.illuminance.flux_scale)),
        ("min_lux", fmt9(r.illuminance.min_lux)),
        ("max_lux", fmt9(r.illuminance.max_lux)),
        (
            "exceeds_lux_warning",
            r.illuminance.exceeds_warning.to_string(),
        ),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(
        "x_m,y_m,z_m,steered_delay_spread_s,baseline_delay_spread_s,delay_spread_ratio,steered_snr_db,baseline_snr_db\n",
    );
    for c in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt9(c.position.x),
            fmt9(c.position.y),
            fmt9(c.position.z),
            fmt9(c.steered_delay_spread),
            fmt9(c.baseline_delay_spread),
            fmt9(c.delay_spread_ratio()),
            fmt9(c.steered_snr_db),
            fmt9(c.baseline_snr_db)
        );
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes every output file of `r` into `dir`, creating it if needed.
pub fn export_results(r: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("metrics.csv", metrics_csv(r)),
        ("link.csv", link_csv(r)),
        ("rates.csv", rates_csv(r)),
        ("traces.csv", traces_csv(r)),
        ("illuminance.csv", illuminance_csv(r)),
        ("summary.csv", summary_csv(r)),
        ("config.toml", r.config.to_toml()),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(1.0), "1.00000000e0");
        assert_eq!(fmt9(-0.000123456789123), "-1.23456789e-4");
        assert_eq!(fmt9(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt9(f64::NAN), "nan");
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_file(&blocker.join("sub.csv"), "a").unwrap_err();
        assert!(err.to_string().contains("sub.csv"), "{err}");
    }
}
