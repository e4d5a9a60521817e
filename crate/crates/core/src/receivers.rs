//! Photodetectors and the four-branch angle-diversity receiver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Orientation, Room, Vec3};

const FOV_EDGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorBranch {
    pub orientation: Orientation,
    /// Unit normal of the active area.
    pub normal: Vec3,
    /// Active area (m²).
    pub area: f64,
    /// A/W
    pub responsivity: f64,
    pub fov_deg: f64,
    cos_fov: f64,
}

impl DetectorBranch {
    pub fn new(
        orientation: Orientation,
        area: f64,
        responsivity: f64,
        fov_deg: f64,
    ) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::invalid(format!(
                "detector area must be positive, got {area}"
            )));
        }
        if !(fov_deg > 0.0 && fov_deg <= 90.0) {
            return Err(Error::invalid(format!(
                "field of view must lie in (0, 90], got {fov_deg}"
            )));
        }
        if !(responsivity >= 0.0) {
            return Err(Error::invalid("responsivity must be non-negative"));
        }
        Ok(Self {
            orientation,
            normal: orientation.direction(),
            area,
            responsivity,
            fov_deg,
            cos_fov: fov_deg.to_radians().cos(),
        })
    }

    /// Effective collecting area (m²) for light travelling along `arrival_direction`.
    ///
    /// `area·cos δ` inside the field of view, zero outside. No concentrator.
    #[inline]
    pub fn incidence_gain(&self, arrival_direction: &Vec3) -> f64 {
        let cos_delta = -self.normal.dot(arrival_direction);
        // the boundary itself is inside the field of view
        if cos_delta <= 0.0 || cos_delta < self.cos_fov - FOV_EDGE_SLACK {
            0.0
        } else {
            self.area * cos_delta
        }
    }
}

pub fn incidence_gain(d: &DetectorBranch, arrival_direction: &Vec3) -> f64 {
    d.incidence_gain(arrival_direction)
}

/// Detector parameters shared by every receiver branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdrParams {
    pub azimuths_deg: Vec<f64>,
    pub elevation_deg: f64,
    pub area: f64,
    pub responsivity: f64,
    pub fov_deg: f64,
}

impl Default for AdrParams {
    fn default() -> Self {
        Self {
            azimuths_deg: vec![45.0, 135.0, 225.0, 315.0],
            elevation_deg: 70.0,
            area: 4e-6,
            responsivity: 0.4,
            fov_deg: 21.0,
        }
    }
}

/// Angle-diversity receiver: co-located detector branches facing different ways.
#[derive(Debug, Clone, PartialEq)]
pub struct Adr {
    pub position: Vec3,
    pub branches: Vec<DetectorBranch>,
}

impl Adr {
    pub fn new(position: Vec3, params: &AdrParams) -> Result<Self> {
        let branches = params
            .azimuths_deg
            .iter()
            .map(|&az| {
                DetectorBranch::new(
                    Orientation::new(az, params.elevation_deg)?,
                    params.area,
                    params.responsivity,
                    params.fov_deg,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if branches.is_empty() {
            return Err(Error::invalid("receiver needs at least one branch"));
        }
        Ok(Self { position, branches })
    }
}

/// Places a receiver inside `room`.
pub fn place_adr(position: Vec3, room: &Room, params: &AdrParams) -> Result<Adr> {
    if !room.contains(&position) {
        return Err(Error::invalid(format!(
            "receiver position ({}, {}, {}) lies outside the room",
            position.x, position.y, position.z
        )));
    }
    Adr::new(position, params)
}
