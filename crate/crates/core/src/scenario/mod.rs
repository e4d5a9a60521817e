//! Experiment orchestration: the steered angle-diversity system, the
//! wide-beam comparison system, lighting, and result export.

pub mod config;
pub mod export;

use rayon::prelude::*;

use crate::channel::{channel_response, ChannelResponse};
use crate::error::{Error, Result};
use crate::geometry::{Room, Vec3};
use crate::metrics::{
    branch_snrs, calibrate_flux, link_metrics, max_data_rate, IlluminanceGrid, LinkMetrics,
};
use crate::receivers::{place_adr, Adr};
use crate::sources::{
    build_adt_units, build_illum_units, build_wide_units, coalesce, Beam, LightUnit, UnitKind,
};
use crate::steering::{localise, select_best_branch, steered_scenario, LinkContext, SteeringState};

pub use config::{parse_config, Mode, ScenarioConfig};
pub use export::export_results;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A configured room with its light units, ready to evaluate receivers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub room: Room,
    pub adt_units: Vec<LightUnit>,
    pub illum_units: Vec<LightUnit>,
    pub baseline_units: Vec<LightUnit>,
}

/// Everything computed for one receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionOutcome {
    /// Metrics at the configured report bit rate.
    pub metrics: LinkMetrics,
    /// Best-branch SNR at each rate of the grid.
    pub snr_by_rate: Vec<f64>,
    pub max_rate: Option<f64>,
    pub steering: Option<SteeringState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionResult {
    pub position: Vec3,
    /// Failures are kept per position so other positions still run.
    pub outcome: std::result::Result<PositionOutcome, String>,
}

impl PositionResult {
    pub fn metrics(&self) -> Option<&LinkMetrics> {
        self.outcome.as_ref().ok().map(|o| &o.metrics)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminanceSummary {
    /// Multiplier applied to every configured luminous flux.
    pub flux_scale: f64,
    pub min_lux: f64,
    pub max_lux: f64,
    pub exceeds_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mode: Mode,
    pub version: String,
    pub config: ScenarioConfig,
    pub rate_grid: Vec<f64>,
    pub positions: Vec<PositionResult>,
    /// Largest grid rate meeting the SNR target at every position.
    pub worst_case_max_rate: Option<f64>,
    pub illuminance: IlluminanceSummary,
    pub illuminance_grid: IlluminanceGrid,
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let room = Room::build(&config.room())?;
        Ok(Self {
            config: config.clone(),
            room,
            adt_units: build_adt_units(&config.adt())?,
            illum_units: build_illum_units(&config.illumination())?,
            baseline_units: build_wide_units(&config.baseline(), UnitKind::Adt)?,
        })
    }

    pub fn place(&self, position: Vec3) -> Result<Adr> {
        place_adr(position, &self.room, &self.config.adr())
    }

    fn context<'a>(&'a self, adr: &'a Adr, bit_rate: f64) -> LinkContext<'a> {
        LinkContext {
            room: &self.room,
            adr,
            settings: self.config.channel(),
            noise: self.config.noise(),
            bit_rate,
        }
    }

    /// Link metrics for data carried by `data`; every mode goes through here.
    pub fn evaluate_sources(
        &self,
        data: &[Beam],
        adr: &Adr,
    ) -> Result<(ChannelResponse, PositionOutcome)> {
        let cfg = &self.config;
        let data = coalesce(data);
        let response = channel_response(&data, adr, &self.room, &cfg.channel());
        let responsivity = cfg.responsivity_a_per_w;
        let noise = cfg.noise();
        let metrics = link_metrics(
            &response,
            responsivity,
            &noise,
            cfg.report_bit_rate_bps,
            cfg.combining,
        )?;
        let rates = cfg.rate_grid();
        let scan = max_data_rate(
            |r| best_snr(&response, responsivity, &noise, r, cfg.combining),
            &rates,
            cfg.target_snr_db,
        )?;
        Ok((
            response,
            PositionOutcome {
                metrics,
                snr_by_rate: scan.snr_db,
                max_rate: scan.max_rate,
                steering: None,
            },
        ))
    }

    /// Pilot selection, quadrant search, then the steered link.
    pub fn steer_position(&self, position: Vec3) -> Result<PositionOutcome> {
        let adr = self.place(position)?;
        if !self.config.steering_enabled {
            let data: Vec<Beam> = self
                .adt_units
                .iter()
                .flat_map(|u| u.branches.iter().map(|b| b.as_beam()))
                .collect();
            return Ok(self.evaluate_sources(&data, &adr)?.1);
        }
        let ctx = self.context(&adr, self.config.pilot_bit_rate_bps);
        let selection = select_best_branch(&self.adt_units, &ctx)?;
        let branch = &self.adt_units[selection.unit].branches[selection.branch];
        let state = localise(branch, &self.config.steer(), &ctx)?;
        let sources = steered_scenario(&state, &self.adt_units, &self.illum_units);
        let (_, mut outcome) = self.evaluate_sources(&sources.data(), &adr)?;
        outcome.steering = Some(state);
        Ok(outcome)
    }

    /// All wide-angle units transmit together.
    pub fn baseline_position(&self, position: Vec3) -> Result<PositionOutcome> {
        let adr = self.place(position)?;
        let data: Vec<Beam> = self
            .baseline_units
            .iter()
            .flat_map(|u| u.all_beams().copied())
            .collect();
        Ok(self.evaluate_sources(&data, &adr)?.1)
    }

    /// Beams that light the room in `mode` before any steering.
    pub fn lighting_beams(&self, mode: Mode) -> Vec<Beam> {
        let units: Vec<&LightUnit> = match mode {
            Mode::Steered => self.illum_units.iter().chain(&self.adt_units).collect(),
            Mode::Baseline => self.baseline_units.iter().collect(),
        };
        units
            .into_iter()
            .flat_map(|u| u.all_beams().copied())
            .collect()
    }

    /// Floor illuminance grid, scaled to the target minimum when auto-calibration is on.
    pub fn illuminance(&self, mode: Mode) -> Result<(IlluminanceGrid, IlluminanceSummary)> {
        let cfg = &self.config;
        let beams = self.lighting_beams(mode);
        let raw = IlluminanceGrid::compute(
            &beams,
            cfg.room_width,
            cfg.room_length,
            cfg.illum_plane_z_m,
            cfg.illum_grid_pitch_m,
        )?;
        let scale = if cfg.auto_calibrate {
            calibrate_flux(raw.min(), cfg.target_min_lux)?
        } else {
            1.0
        };
        let grid = raw.scaled(scale);
        let (min_lux, max_lux) = (grid.min(), grid.max());
        Ok((
            grid,
            IlluminanceSummary {
                flux_scale: scale,
                min_lux,
                max_lux,
                exceeds_warning: max_lux > cfg.max_lux_warning,
            },
        ))
    }

    pub fn run(&self, mode: Mode) -> Result<RunResult> {
        let positions = self.config.positions();
        let results: Vec<PositionResult> = positions
            .par_iter()
            .map(|&p| {
                let outcome = match mode {
                    Mode::Steered => self.steer_position(p),
                    Mode::Baseline => self.baseline_position(p),
                };
                PositionResult {
                    position: p,
                    outcome: outcome.map_err(|e| e.to_string()),
                }
            })
            .collect();
        let rate_grid = self.config.rate_grid();
        let worst_case_max_rate = worst_case_rate(&results, &rate_grid, self.config.target_snr_db);
        let (illuminance_grid, illuminance) = self.illuminance(mode)?;
        Ok(RunResult {
            mode,
            version: VERSION.to_string(),
            config: ScenarioConfig {
                mode,
                ..self.config.clone()
            },
            rate_grid,
            positions: results,
            worst_case_max_rate,
            illuminance,
            illuminance_grid,
        })
    }
}

fn best_snr(
    response: &ChannelResponse,
    responsivity: f64,
    noise: &crate::metrics::NoiseModel,
    bit_rate: f64,
    combining: crate::metrics::Combining,
) -> Result<f64> {
    use crate::metrics::Combining;
    let snrs = branch_snrs(response, responsivity, noise, bit_rate)?;
    Ok(match combining {
        Combining::SelectBest => snrs.into_iter().fold(f64::NEG_INFINITY, f64::max),
        Combining::MaximalRatio => {
            let linear: f64 = snrs.iter().map(|s| 10f64.powf(s / 10.0)).sum();
            10.0 * linear.log10()
        }
    })
}

/// Largest rate whose SNR meets `target` at every position; a failed
/// position disqualifies every rate.
fn worst_case_rate(results: &[PositionResult], rates: &[f64], target: f64) -> Option<f64> {
    let mut best = None;
    for (k, &rate) in rates.iter().enumerate() {
        let ok = results.iter().all(|r| match &r.outcome {
            Ok(o) => o.snr_by_rate.get(k).is_some_and(|&s| s >= target),
            Err(_) => false,
        });
        if ok {
            best = Some(best.map_or(rate, |b: f64| b.max(rate)));
        }
    }
    best
}

/// Steered system at every configured receiver position.
pub fn run_proposed(config: &ScenarioConfig) -> Result<RunResult> {
    Scenario::new(config)?.run(Mode::Steered)
}

/// Wide-beam comparison system at every configured receiver position.
pub fn run_baseline(config: &ScenarioConfig) -> Result<RunResult> {
    Scenario::new(config)?.run(Mode::Baseline)
}

pub fn run(config: &ScenarioConfig) -> Result<RunResult> {
    Scenario::new(config)?.run(config.mode)
}

/// One row of a steered-versus-baseline comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub position: Vec3,
    pub steered_delay_spread: f64,
    pub baseline_delay_spread: f64,
    pub steered_snr_db: f64,
    pub baseline_snr_db: f64,
}

impl ComparisonRow {
    pub fn delay_spread_ratio(&self) -> f64 {
        self.baseline_delay_spread / self.steered_delay_spread
    }
}

/// Pairs up two runs position by position.
pub fn compare(steered: &RunResult, baseline: &RunResult) -> Result<Vec<ComparisonRow>> {
    steered
        .positions
        .iter()
        .zip(&baseline.positions)
        .map(|(s, b)| {
            let (Some(sm), Some(bm)) = (s.metrics(), b.metrics()) else {
                return Err(Error::UndefinedMetric(format!(
                    "no link at ({}, {}, {})",
                    s.position.x, s.position.y, s.position.z
                )));
            };
            Ok(ComparisonRow {
                position: s.position,
                steered_delay_spread: sm.delay_spread,
                baseline_delay_spread: bm.delay_spread,
                steered_snr_db: sm.snr_db,
                baseline_snr_db: bm.snr_db,
            })
        })
        .collect()
}
