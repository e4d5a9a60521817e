//! Scenario configuration: a flat TOML key/value file where every key is
//! optional and falls back to the reference room setup.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSettings;
use crate::error::{Error, Result};
use crate::geometry::{exact_divisions, RoomConfig, Vec3};
use crate::metrics::{Combining, NoiseModel, OOK_TARGET_SNR_DB};
use crate::receivers::AdrParams;
use crate::sources::{lambertian_order_from_half_angle, AdtParams, WideUnitParams};
use crate::steering::SteerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Angle-diversity units with beam steering.
    #[default]
    Steered,
    /// Eight wide-angle units, all transmitting, no steering.
    Baseline,
}

/// Every recognised key with its default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,

    pub room_width: f64,
    pub room_length: f64,
    pub room_height: f64,
    pub rho_ceiling: f64,
    pub rho_walls: f64,
    pub rho_floor: f64,
    pub mesh_first_order: f64,
    pub mesh_second_order: f64,
    pub max_reflection_order: u8,
    pub speed_of_light: f64,
    pub cf_height: f64,

    pub adt_positions: Vec<[f64; 3]>,
    pub adt_branch_azimuths_deg: Vec<f64>,
    pub adt_branch_elevation_deg: f64,
    pub adt_half_angle_deg: f64,
    pub adt_lds_per_branch: usize,
    pub ld_power_w: f64,
    pub adt_ld_flux_lm: f64,

    pub illum_positions: Vec<[f64; 3]>,
    pub illum_semi_angle_deg: f64,
    pub illum_lds_per_unit: usize,
    pub illum_ld_power_w: f64,
    pub illum_ld_flux_lm: f64,

    pub baseline_semi_angle_deg: f64,
    pub baseline_lds_per_unit: usize,
    /// Give the baseline the same total optical power as the ADT units.
    pub baseline_power_matched: bool,
    /// Per-diode power when `baseline_power_matched` is false.
    pub baseline_ld_power_w: f64,

    pub adr_azimuths_deg: Vec<f64>,
    pub adr_elevation_deg: f64,
    pub detector_area_m2: f64,
    pub responsivity_a_per_w: f64,
    pub fov_deg: f64,
    pub combining: Combining,

    pub preamp_current_density: f64,
    pub background_current_a: f64,
    pub bandwidth_factor: f64,
    pub signal_shot_noise: bool,

    pub rate_min_bps: f64,
    pub rate_max_bps: f64,
    pub rate_step_bps: f64,
    pub target_snr_db: f64,
    /// Bit rate used for pilot and probe SNRs.
    pub pilot_bit_rate_bps: f64,
    /// Bit rate at which per-position link metrics are reported.
    pub report_bit_rate_bps: f64,

    pub steering_enabled: bool,
    pub steer_power_fraction: f64,
    pub steer_half_angle_deg: f64,
    pub final_cell_side_m: f64,

    pub receiver_positions: Vec<[f64; 3]>,

    pub illum_grid_pitch_m: f64,
    pub illum_plane_z_m: f64,
    /// Scale all luminous flux so the grid minimum equals `target_min_lux`.
    pub auto_calibrate: bool,
    pub target_min_lux: f64,
    pub max_lux_warning: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let room = RoomConfig::default();
        let adt = AdtParams::default();
        let illum = WideUnitParams::default();
        let adr = AdrParams::default();
        let noise = NoiseModel::default();
        let steer = SteerParams::default();
        Self {
            mode: Mode::Steered,
            room_width: room.width,
            room_length: room.length,
            room_height: room.height,
            rho_ceiling: room.rho_ceiling,
            rho_walls: room.rho_walls,
            rho_floor: room.rho_floor,
            mesh_first_order: room.first_order_side,
            mesh_second_order: room.second_order_side,
            max_reflection_order: 2,
            speed_of_light: crate::channel::SPEED_OF_LIGHT,
            cf_height: 1.0,
            adt_positions: adt.positions,
            adt_branch_azimuths_deg: adt.branch_azimuths_deg,
            adt_branch_elevation_deg: adt.branch_elevation_deg,
            adt_half_angle_deg: adt.half_angle_deg,
            adt_lds_per_branch: adt.lds_per_branch,
            ld_power_w: adt.ld_power,
            adt_ld_flux_lm: adt.ld_flux,
            illum_positions: illum.positions,
            illum_semi_angle_deg: illum.semi_angle_deg,
            illum_lds_per_unit: illum.lds_per_unit,
            illum_ld_power_w: illum.ld_power,
            illum_ld_flux_lm: illum.ld_flux,
            baseline_semi_angle_deg: 70.0,
            baseline_lds_per_unit: 9,
            baseline_power_matched: true,
            baseline_ld_power_w: 0.5,
            adr_azimuths_deg: adr.azimuths_deg,
            adr_elevation_deg: adr.elevation_deg,
            detector_area_m2: adr.area,
            responsivity_a_per_w: adr.responsivity,
            fov_deg: adr.fov_deg,
            combining: Combining::SelectBest,
            preamp_current_density: noise.preamp_current_density,
            background_current_a: noise.background_current,
            bandwidth_factor: noise.bandwidth_factor,
            signal_shot_noise: noise.signal_shot_noise,
            rate_min_bps: 0.5e9,
            rate_max_bps: 30e9,
            rate_step_bps: 0.1e9,
            target_snr_db: OOK_TARGET_SNR_DB,
            pilot_bit_rate_bps: 10e9,
            report_bit_rate_bps: 10e9,
            steering_enabled: true,
            steer_power_fraction: steer.power_fraction,
            steer_half_angle_deg: steer.half_angle_deg,
            final_cell_side_m: steer.final_cell_side,
            receiver_positions: (1..=7).map(|y| [2.0, y as f64, 1.0]).collect(),
            illum_grid_pitch_m: 0.1,
            illum_plane_z_m: 0.0,
            auto_calibrate: true,
            target_min_lux: 313.7,
            max_lux_warning: 1000.0,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be non-negative, got {v}")))
    }
}

fn unit_interval(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(key, format!("must lie in [0, 1], got {v}")))
    }
}

fn half_angle(key: &str, v: f64) -> Result<()> {
    lambertian_order_from_half_angle(v)
        .map(|_| ())
        .map_err(|_| Error::config(key, format!("must lie in (0, 90) degrees, got {v}")))
}

impl ScenarioConfig {
    /// Parses and validates a config file. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        positive("room_width", self.room_width)?;
        positive("room_length", self.room_length)?;
        positive("room_height", self.room_height)?;
        unit_interval("rho_ceiling", self.rho_ceiling)?;
        unit_interval("rho_walls", self.rho_walls)?;
        unit_interval("rho_floor", self.rho_floor)?;
        positive("mesh_first_order", self.mesh_first_order)?;
        positive("mesh_second_order", self.mesh_second_order)?;
        if self.is_default_room() {
            for (key, side) in [
                ("mesh_first_order", self.mesh_first_order),
                ("mesh_second_order", self.mesh_second_order),
            ] {
                for len in [self.room_width, self.room_length, self.room_height] {
                    if exact_divisions(len, side).is_none() {
                        return Err(Error::config(
                            key,
                            format!("element side {side} m does not divide the {len} m room edge"),
                        ));
                    }
                }
            }
        }
        if self.max_reflection_order > 2 {
            return Err(Error::config("max_reflection_order", "must be 0, 1 or 2"));
        }
        positive("speed_of_light", self.speed_of_light)?;
        if !(self.cf_height > 0.0 && self.cf_height < self.room_height) {
            return Err(Error::config(
                "cf_height",
                "must lie strictly between floor and ceiling",
            ));
        }

        self.check_positions("adt_positions", &self.adt_positions)?;
        self.check_positions("illum_positions", &self.illum_positions)?;
        if self.adt_positions.is_empty() {
            return Err(Error::config("adt_positions", "need at least one unit"));
        }
        if self.adt_branch_azimuths_deg.is_empty() {
            return Err(Error::config(
                "adt_branch_azimuths_deg",
                "need at least one branch",
            ));
        }
        if !(-90.0..0.0).contains(&self.adt_branch_elevation_deg) {
            return Err(Error::config(
                "adt_branch_elevation_deg",
                "branches must point below the horizontal",
            ));
        }
        half_angle("adt_half_angle_deg", self.adt_half_angle_deg)?;
        half_angle("illum_semi_angle_deg", self.illum_semi_angle_deg)?;
        half_angle("baseline_semi_angle_deg", self.baseline_semi_angle_deg)?;
        half_angle("steer_half_angle_deg", self.steer_half_angle_deg)?;
        for (key, n) in [
            ("adt_lds_per_branch", self.adt_lds_per_branch),
            ("illum_lds_per_unit", self.illum_lds_per_unit),
            ("baseline_lds_per_unit", self.baseline_lds_per_unit),
        ] {
            if n == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        non_negative("ld_power_w", self.ld_power_w)?;
        non_negative("adt_ld_flux_lm", self.adt_ld_flux_lm)?;
        non_negative("illum_ld_power_w", self.illum_ld_power_w)?;
        non_negative("illum_ld_flux_lm", self.illum_ld_flux_lm)?;
        non_negative("baseline_ld_power_w", self.baseline_ld_power_w)?;

        if self.adr_azimuths_deg.is_empty() {
            return Err(Error::config(
                "adr_azimuths_deg",
                "need at least one detector",
            ));
        }
        if !(-90.0..=90.0).contains(&self.adr_elevation_deg) {
            return Err(Error::config("adr_elevation_deg", "must lie in [-90, 90]"));
        }
        positive("detector_area_m2", self.detector_area_m2)?;
        non_negative("responsivity_a_per_w", self.responsivity_a_per_w)?;
        if !(self.fov_deg > 0.0 && self.fov_deg <= 90.0) {
            return Err(Error::config("fov_deg", "must lie in (0, 90]"));
        }

        non_negative("preamp_current_density", self.preamp_current_density)?;
        non_negative("background_current_a", self.background_current_a)?;
        non_negative("bandwidth_factor", self.bandwidth_factor)?;

        positive("rate_min_bps", self.rate_min_bps)?;
        positive("rate_step_bps", self.rate_step_bps)?;
        if !(self.rate_max_bps >= self.rate_min_bps) {
            return Err(Error::config(
                "rate_max_bps",
                "must be at least rate_min_bps",
            ));
        }
        if !self.target_snr_db.is_finite() {
            return Err(Error::config("target_snr_db", "must be finite"));
        }
        positive("pilot_bit_rate_bps", self.pilot_bit_rate_bps)?;
        positive("report_bit_rate_bps", self.report_bit_rate_bps)?;

        if !(self.steer_power_fraction > 0.0 && self.steer_power_fraction <= 1.0) {
            return Err(Error::config("steer_power_fraction", "must lie in (0, 1]"));
        }
        positive("final_cell_side_m", self.final_cell_side_m)?;

        if self.receiver_positions.is_empty() {
            return Err(Error::config(
                "receiver_positions",
                "need at least one position",
            ));
        }
        self.check_positions("receiver_positions", &self.receiver_positions)?;

        positive("illum_grid_pitch_m", self.illum_grid_pitch_m)?;
        if !(0.0..self.room_height).contains(&self.illum_plane_z_m) {
            return Err(Error::config("illum_plane_z_m", "must lie inside the room"));
        }
        positive("target_min_lux", self.target_min_lux)?;
        positive("max_lux_warning", self.max_lux_warning)?;
        Ok(())
    }

    fn is_default_room(&self) -> bool {
        let d = RoomConfig::default();
        self.room_width == d.width && self.room_length == d.length && self.room_height == d.height
    }

    fn check_positions(&self, key: &str, positions: &[[f64; 3]]) -> Result<()> {
        for (i, p) in positions.iter().enumerate() {
            let inside = (0.0..=self.room_width).contains(&p[0])
                && (0.0..=self.room_length).contains(&p[1])
                && (0.0..=self.room_height).contains(&p[2]);
            if !inside {
                return Err(Error::config(
                    format!("{key}[{i}]"),
                    format!("({}, {}, {}) lies outside the room", p[0], p[1], p[2]),
                ));
            }
        }
        Ok(())
    }

    pub fn room(&self) -> RoomConfig {
        RoomConfig {
            width: self.room_width,
            length: self.room_length,
            height: self.room_height,
            rho_ceiling: self.rho_ceiling,
            rho_walls: self.rho_walls,
            rho_floor: self.rho_floor,
            first_order_side: self.mesh_first_order,
            second_order_side: self.mesh_second_order,
        }
    }

    pub fn channel(&self) -> ChannelSettings {
        ChannelSettings {
            speed_of_light: self.speed_of_light,
            max_order: self.max_reflection_order,
        }
    }

    pub fn adt(&self) -> AdtParams {
        AdtParams {
            positions: self.adt_positions.clone(),
            branch_azimuths_deg: self.adt_branch_azimuths_deg.clone(),
            branch_elevation_deg: self.adt_branch_elevation_deg,
            half_angle_deg: self.adt_half_angle_deg,
            lds_per_branch: self.adt_lds_per_branch,
            ld_power: self.ld_power_w,
            ld_flux: self.adt_ld_flux_lm,
        }
    }

    pub fn illumination(&self) -> WideUnitParams {
        WideUnitParams {
            positions: self.illum_positions.clone(),
            semi_angle_deg: self.illum_semi_angle_deg,
            lds_per_unit: self.illum_lds_per_unit,
            ld_power: self.illum_ld_power_w,
            ld_flux: self.illum_ld_flux_lm,
        }
    }

    /// Wide-angle units at the ADT positions for the comparison system.
    pub fn baseline(&self) -> WideUnitParams {
        let lds = self.adt_positions.len() * self.baseline_lds_per_unit;
        let ld_power = if self.baseline_power_matched {
            let adt_total = self.adt_positions.len() as f64
                * self.adt_branch_azimuths_deg.len() as f64
                * self.adt_lds_per_branch as f64
                * self.ld_power_w;
            adt_total / lds as f64
        } else {
            self.baseline_ld_power_w
        };
        WideUnitParams {
            positions: self.adt_positions.clone(),
            semi_angle_deg: self.baseline_semi_angle_deg,
            lds_per_unit: self.baseline_lds_per_unit,
            ld_power,
            ld_flux: self.illum_ld_flux_lm,
        }
    }

    pub fn adr(&self) -> AdrParams {
        AdrParams {
            azimuths_deg: self.adr_azimuths_deg.clone(),
            elevation_deg: self.adr_elevation_deg,
            area: self.detector_area_m2,
            responsivity: self.responsivity_a_per_w,
            fov_deg: self.fov_deg,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            preamp_current_density: self.preamp_current_density,
            background_current: self.background_current_a,
            bandwidth_factor: self.bandwidth_factor,
            signal_shot_noise: self.signal_shot_noise,
            ..NoiseModel::default()
        }
    }

    pub fn steer(&self) -> SteerParams {
        SteerParams {
            power_fraction: self.steer_power_fraction,
            half_angle_deg: self.steer_half_angle_deg,
            final_cell_side: self.final_cell_side_m,
            coverage_half_angle_deg: self.adt_half_angle_deg,
        }
    }

    /// Bit-rate grid `min, min + step, ..., max`.
    pub fn rate_grid(&self) -> Vec<f64> {
        let n =
            ((self.rate_max_bps - self.rate_min_bps) / self.rate_step_bps + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.rate_min_bps + k as f64 * self.rate_step_bps)
            .collect()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.receiver_positions
            .iter()
            .map(|p| Vec3::new(p[0], p[1], p[2]))
            .collect()
    }
}

/// Parses a config; an empty document yields the default scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::parse(text)
}
