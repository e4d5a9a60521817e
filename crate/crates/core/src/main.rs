use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use vlcsim::geometry::Vec3;
use vlcsim::scenario::{self, export, Mode, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "vlcsim",
    version,
    about = "Indoor optical wireless channel simulator"
)]
struct Cli {
    /// Scenario file; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steered system at every configured receiver position.
    Simulate,
    /// Wide-beam system, all units transmitting.
    Baseline,
    /// Steer to a single receiver position.
    Steer {
        /// Receiver position as x,y,z in metres.
        #[arg(long, value_parser = parse_pos)]
        pos: Vec3,
    },
    /// Floor illuminance map.
    Illuminance {
        /// Scale flux so the minimum illuminance equals this value (lx).
        #[arg(long)]
        calibrate: Option<f64>,
        #[arg(long, value_enum, default_value = "steered")]
        system: System,
    },
    /// Run both systems and tabulate delay spread and SNR side by side.
    Compare,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum System {
    Steered,
    Baseline,
}

fn parse_pos(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate `{p}`: {e}"))
        })
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<ScenarioConfig> {
    let cfg = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            scenario::parse_config(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ScenarioConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn report(r: &scenario::RunResult) {
    for p in &r.positions {
        let pos = format!(
            "({:.2}, {:.2}, {:.2})",
            p.position.x, p.position.y, p.position.z
        );
        match &p.outcome {
            Ok(o) => println!(
                "{pos}  delay spread {:.4e} s  SNR {:.3} dB  branch {}  max rate {}",
                o.metrics.delay_spread,
                o.metrics.snr_db,
                o.metrics.best_branch_index,
                o.max_rate
                    .map_or("none".to_string(), |v| format!("{:.2} Gb/s", v / 1e9))
            ),
            Err(e) => println!("{pos}  failed: {e}"),
        }
    }
    match r.worst_case_max_rate {
        Some(v) => println!("worst-case max rate {:.2} Gb/s", v / 1e9),
        None => println!("worst-case max rate: target SNR not met"),
    }
    warn_lux(&r.illuminance);
}

fn warn_lux(s: &scenario::IlluminanceSummary) {
    println!(
        "illuminance min {:.1} lx, max {:.1} lx (flux scale {:.4})",
        s.min_lux, s.max_lux, s.flux_scale
    );
    if s.exceeds_warning {
        eprintln!(
            "warning: peak illuminance {:.1} lx exceeds the comfort limit",
            s.max_lux
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(cli.config.as_ref())?;
    let out = &cli.out;
    match cli.command {
        Command::Simulate => {
            let r = Scenario::new(&cfg)?.run(Mode::Steered)?;
            report(&r);
            export::export_results(&r, out)?;
        }
        Command::Baseline => {
            let r = Scenario::new(&cfg)?.run(Mode::Baseline)?;
            report(&r);
            export::export_results(&r, out)?;
        }
        Command::Steer { pos } => {
            cfg.receiver_positions = vec![[pos.x, pos.y, pos.z]];
            let r = Scenario::new(&cfg)?.run(Mode::Steered)?;
            report(&r);
            export::export_results(&r, out)?;
        }
        Command::Illuminance { calibrate, system } => {
            if let Some(target) = calibrate {
                if target.is_nan() || target <= 0.0 {
                    bail!("--calibrate must be positive, got {target}");
                }
                cfg.auto_calibrate = true;
                cfg.target_min_lux = target;
            }
            let mode = match system {
                System::Steered => Mode::Steered,
                System::Baseline => Mode::Baseline,
            };
            let sc = Scenario::new(&cfg)?;
            let (grid, summary) = sc.illuminance(mode)?;
            warn_lux(&summary);
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            export::write_file(&out.join("illuminance.csv"), &export::grid_csv(&grid))?;
        }
        Command::Compare => {
            let sc = Scenario::new(&cfg)?;
            let steered = sc.run(Mode::Steered)?;
            let baseline = sc.run(Mode::Baseline)?;
            let rows = scenario::compare(&steered, &baseline)?;
            println!("position            steered DS (ns)  baseline DS (ns)  ratio   steered SNR  baseline SNR");
            for c in &rows {
                println!(
                    "({:.2}, {:.2}, {:.2})  {:>15.4}  {:>16.4}  {:>6.1}  {:>11.2}  {:>12.2}",
                    c.position.x,
                    c.position.y,
                    c.position.z,
                    c.steered_delay_spread * 1e9,
                    c.baseline_delay_spread * 1e9,
                    c.delay_spread_ratio(),
                    c.steered_snr_db,
                    c.baseline_snr_db
                );
            }
            export::export_results(&steered, &out.join("steered"))?;
            export::export_results(&baseline, &out.join("baseline"))?;
            export::write_file(&out.join("compare.csv"), &export::comparison_csv(&rows))?;
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| run(cli))
        }
        None => run(cli),
    }
}
