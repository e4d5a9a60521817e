//! Laser-diode emitters and the two ceiling light-unit designs.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Orientation, Vec3};

/// Lambertian order `n` for which `cos^n(half_angle) = 1/2`.
pub fn lambertian_order_from_half_angle(half_angle_deg: f64) -> Result<f64> {
    if !(half_angle_deg > 0.0 && half_angle_deg < 90.0) {
        return Err(Error::invalid(format!(
            "half-power angle must lie in (0, 90) deg, got {half_angle_deg}"
        )));
    }
    Ok(-LN_2 / half_angle_deg.to_radians().cos().ln())
}

/// Generalised Lambertian intensity `total·(n+1)/(2π)·cos^n φ`, zero behind the emitter.
#[inline]
pub fn lambertian_intensity(total: f64, order: f64, cos_phi: f64) -> f64 {
    if cos_phi <= 0.0 {
        return 0.0;
    }
    total * (order + 1.0) / (2.0 * PI) * cos_phi.powf(order)
}

/// A single Lambertian emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub position: Vec3,
    /// Unit boresight.
    pub pointing: Vec3,
    pub order: f64,
    /// Optical power (W).
    pub power: f64,
    /// Luminous flux (lm).
    pub flux: f64,
}

impl Beam {
    pub fn new(position: Vec3, pointing: Vec3, order: f64, power: f64, flux: f64) -> Result<Self> {
        if !(order > 0.0) || !order.is_finite() {
            return Err(Error::invalid(format!(
                "Lambertian order must be positive, got {order}"
            )));
        }
        if !(power >= 0.0) || !(flux >= 0.0) {
            return Err(Error::invalid("beam power and flux must be non-negative"));
        }
        let norm = pointing.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("beam pointing must be non-zero"));
        }
        Ok(Self {
            position,
            pointing: pointing / norm,
            order,
            power,
            flux,
        })
    }

    /// Radiant intensity (W/sr) toward the unit vector `direction`.
    pub fn radiant_intensity(&self, direction: &Vec3) -> f64 {
        lambertian_intensity(self.power, self.order, self.pointing.dot(direction))
    }

    /// Luminous intensity (cd) toward the unit vector `direction`.
    pub fn luminous_intensity(&self, direction: &Vec3) -> f64 {
        lambertian_intensity(self.flux, self.order, self.pointing.dot(direction))
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    /// Same emitter with power and flux both multiplied by `k`.
    pub fn scaled(mut self, k: f64) -> Self {
        self.power *= k;
        self.flux *= k;
        self
    }
}

pub fn radiant_intensity(b: &Beam, direction: &Vec3) -> f64 {
    b.radiant_intensity(direction)
}

/// Merges emitters that share position, pointing and order into one.
///
/// Intensity is linear in power, so the merged set radiates identically.
/// First-occurrence order is kept.
pub fn coalesce(beams: &[Beam]) -> Vec<Beam> {
    let mut out: Vec<Beam> = Vec::new();
    for b in beams {
        match out
            .iter_mut()
            .find(|o| o.position == b.position && o.pointing == b.pointing && o.order == b.order)
        {
            Some(o) => {
                o.power += b.power;
                o.flux += b.flux;
            }
            None => out.push(*b),
        }
    }
    out
}

/// One ADT branch: co-located, co-pointed laser-diode modules.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub unit: usize,
    pub index: usize,
    pub orientation: Orientation,
    pub beams: Vec<Beam>,
}

impl Branch {
    pub fn power(&self) -> f64 {
        self.beams.iter().map(|b| b.power).sum()
    }

    pub fn position(&self) -> Vec3 {
        self.beams[0].position
    }

    pub fn pointing(&self) -> Vec3 {
        self.beams[0].pointing
    }

    pub fn order(&self) -> f64 {
        self.beams[0].order
    }

    /// The branch as one emitter carrying the summed power and flux.
    pub fn as_beam(&self) -> Beam {
        let mut b = self.beams[0];
        b.power = self.power();
        b.flux = self.beams.iter().map(|b| b.flux).sum();
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitKind {
    /// Angle-diversity unit: illumination plus communication.
    Adt,
    /// Wide-angle unit used for illumination only.
    Illumination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightUnit {
    pub id: usize,
    pub kind: UnitKind,
    pub position: Vec3,
    /// Non-empty for ADT units.
    pub branches: Vec<Branch>,
    /// Non-empty for illumination units.
    pub beams: Vec<Beam>,
}

impl LightUnit {
    pub fn all_beams(&self) -> impl Iterator<Item = &Beam> {
        self.branches
            .iter()
            .flat_map(|b| b.beams.iter())
            .chain(self.beams.iter())
    }

    pub fn power(&self) -> f64 {
        self.all_beams().map(|b| b.power).sum()
    }
}

/// Parameters for the angle-diversity units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdtParams {
    pub positions: Vec<[f64; 3]>,
    pub branch_azimuths_deg: Vec<f64>,
    pub branch_elevation_deg: f64,
    pub half_angle_deg: f64,
    pub lds_per_branch: usize,
    /// Optical power per laser-diode module (W).
    pub ld_power: f64,
    /// Luminous flux per laser-diode module (lm).
    pub ld_flux: f64,
}

impl Default for AdtParams {
    fn default() -> Self {
        Self {
            positions: vec![
                [1.0, 1.0, 3.0],
                [1.0, 3.0, 3.0],
                [1.0, 5.0, 3.0],
                [1.0, 7.0, 3.0],
                [3.0, 1.0, 3.0],
                [3.0, 3.0, 3.0],
                [3.0, 5.0, 3.0],
                [3.0, 7.0, 3.0],
            ],
            branch_azimuths_deg: vec![45.0, 135.0, 225.0, 315.0],
            branch_elevation_deg: -70.0,
            half_angle_deg: 21.0,
            lds_per_branch: 3,
            ld_power: 0.5,
            ld_flux: 100.0,
        }
    }
}

/// Parameters for the wide-angle units (illumination-only, or the baseline system).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WideUnitParams {
    pub positions: Vec<[f64; 3]>,
    pub semi_angle_deg: f64,
    pub lds_per_unit: usize,
    pub ld_power: f64,
    pub ld_flux: f64,
}

impl Default for WideUnitParams {
    fn default() -> Self {
        Self {
            positions: vec![
                [2.0, 1.0, 3.0],
                [2.0, 2.5, 3.0],
                [2.0, 4.0, 3.0],
                [2.0, 5.5, 3.0],
                [2.0, 7.0, 3.0],
            ],
            semi_angle_deg: 70.0,
            lds_per_unit: 9,
            ld_power: 0.5,
            ld_flux: 100.0,
        }
    }
}

fn vec3(p: &[f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

pub fn build_adt_units(params: &AdtParams) -> Result<Vec<LightUnit>> {
    let order = lambertian_order_from_half_angle(params.half_angle_deg)?;
    params
        .positions
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let position = vec3(p);
            let branches = params
                .branch_azimuths_deg
                .iter()
                .enumerate()
                .map(|(index, &az)| {
                    let orientation = Orientation::new(az, params.branch_elevation_deg)?;
                    let beam = Beam::new(
                        position,
                        orientation.direction(),
                        order,
                        params.ld_power,
                        params.ld_flux,
                    )?;
                    Ok(Branch {
                        unit: id,
                        index,
                        orientation,
                        beams: vec![beam; params.lds_per_branch],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LightUnit {
                id,
                kind: UnitKind::Adt,
                position,
                branches,
                beams: Vec::new(),
            })
        })
        .collect()
}

/// Wide-angle units with every diode pointing straight down.
pub fn build_wide_units(params: &WideUnitParams, kind: UnitKind) -> Result<Vec<LightUnit>> {
    let order = lambertian_order_from_half_angle(params.semi_angle_deg)?;
    let down = Vec3::new(0.0, 0.0, -1.0);
    params
        .positions
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let position = vec3(p);
            let beam = Beam::new(position, down, order, params.ld_power, params.ld_flux)?;
            Ok(LightUnit {
                id,
                kind,
                position,
                branches: Vec::new(),
                beams: vec![beam; params.lds_per_unit],
            })
        })
        .collect()
}

pub fn build_illum_units(params: &WideUnitParams) -> Result<Vec<LightUnit>> {
    build_wide_units(params, UnitKind::Illumination)
}
