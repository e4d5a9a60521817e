//! Ray-traced multipath channel: line-of-sight, single- and double-bounce
//! diffuse reflections from Lambertian room surfaces.
//!
//! Every path is kept as an exact `(time, power)` arrival. Arrival lists are
//! assembled in a fixed canonical order (reflection order, then source index,
//! then element indices) regardless of how many threads did the work, so
//! results are bit-identical across thread counts.

use std::f64::consts::FRAC_1_PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Room, SurfaceElement, Vec3};
use crate::receivers::{Adr, DetectorBranch};
use crate::sources::Beam;

/// Propagation speed (m/s).
pub const SPEED_OF_LIGHT: f64 = 3e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSettings {
    pub speed_of_light: f64,
    /// Highest reflection order traced, 0 to 2.
    pub max_order: u8,
}

impl Default for ChannelSettings {
    fn default() -> Self {
        Self {
            speed_of_light: SPEED_OF_LIGHT,
            max_order: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Seconds after emission.
    pub time: f64,
    /// Watts at the detector.
    pub power: f64,
    /// Number of surface bounces.
    pub order: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrivalList {
    pub arrivals: Vec<Arrival>,
}

impl ArrivalList {
    pub fn new(arrivals: Vec<Arrival>) -> Self {
        Self { arrivals }
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Arrival> {
        self.arrivals.iter()
    }

    pub fn total_power(&self) -> f64 {
        self.arrivals.iter().map(|a| a.power).sum()
    }

    pub fn power_of_order(&self, order: u8) -> f64 {
        self.arrivals
            .iter()
            .filter(|a| a.order == order)
            .map(|a| a.power)
            .sum()
    }

    pub fn earliest(&self) -> Option<f64> {
        self.arrivals.iter().map(|a| a.time).reduce(f64::min)
    }

    pub fn extend(&mut self, other: ArrivalList) {
        self.arrivals.extend(other.arrivals);
    }

    /// Re-sorts into canonical order (stable by reflection order).
    fn sort_canonical(&mut self) {
        self.arrivals.sort_by_key(|a| a.order);
    }
}

impl FromIterator<Arrival> for ArrivalList {
    fn from_iter<I: IntoIterator<Item = Arrival>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Unit direction and distance from `from` to `to`.
#[inline]
fn ray(from: &Vec3, to: &Vec3) -> (Vec3, f64) {
    let v = to - from;
    let d = v.norm();
    (v / d, d)
}

/// Direct path from one emitter to one detector branch at `rx`.
pub fn los_arrival(
    b: &Beam,
    d: &DetectorBranch,
    rx: &Vec3,
    settings: &ChannelSettings,
) -> Option<Arrival> {
    let (dir, dist) = ray(&b.position, rx);
    if !(dist > 0.0) {
        return None;
    }
    let power = b.radiant_intensity(&dir) * d.incidence_gain(&dir) / (dist * dist);
    (power > 0.0).then(|| Arrival {
        time: dist / settings.speed_of_light,
        power,
        order: 0,
    })
}

/// Power incident on and re-emitted by one surface element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFlux {
    pub incident: f64,
    pub reemitted: f64,
    /// Emitter-to-element distance.
    pub distance: f64,
}

/// Power intercepted by element `e` from emitter `b`.
#[inline]
fn incident_on_element(b: &Beam, e: &SurfaceElement) -> (f64, f64) {
    let (dir, dist) = ray(&b.position, &e.center);
    let cos_in = -e.normal.dot(&dir);
    if cos_in <= 0.0 {
        return (0.0, dist);
    }
    (
        b.radiant_intensity(&dir) * e.area * cos_in / (dist * dist),
        dist,
    )
}

/// Per-element incident and re-emitted power for `b` over `mesh`.
pub fn element_fluxes(b: &Beam, mesh: &[SurfaceElement]) -> Vec<ElementFlux> {
    mesh.par_iter()
        .map(|e| {
            let (incident, distance) = incident_on_element(b, e);
            ElementFlux {
                incident,
                reemitted: e.reflectivity * incident,
                distance,
            }
        })
        .collect()
}

/// Power reaching detector `d` at `rx` from an element re-emitting `power` as
/// a first-order Lambertian source, and the element-to-detector distance.
#[inline]
fn element_to_detector(
    e: &SurfaceElement,
    power: f64,
    d: &DetectorBranch,
    rx: &Vec3,
) -> (f64, f64) {
    let (dir, dist) = ray(&e.center, rx);
    let cos_out = e.normal.dot(&dir);
    if cos_out <= 0.0 {
        return (0.0, dist);
    }
    (
        power * FRAC_1_PI * cos_out * d.incidence_gain(&dir) / (dist * dist),
        dist,
    )
}

pub fn first_order_arrivals(
    b: &Beam,
    d: &DetectorBranch,
    rx: &Vec3,
    mesh: &[SurfaceElement],
    settings: &ChannelSettings,
) -> ArrivalList {
    let fluxes = element_fluxes(b, mesh);
    first_order_from_fluxes(&fluxes, d, rx, mesh, settings)
}

fn first_order_from_fluxes(
    fluxes: &[ElementFlux],
    d: &DetectorBranch,
    rx: &Vec3,
    mesh: &[SurfaceElement],
    settings: &ChannelSettings,
) -> ArrivalList {
    mesh.par_iter()
        .zip(fluxes.par_iter())
        .filter_map(|(e, f)| {
            if f.reemitted <= 0.0 {
                return None;
            }
            let (power, d2) = element_to_detector(e, f.reemitted, d, rx);
            (power > 0.0).then(|| Arrival {
                time: (f.distance + d2) / settings.speed_of_light,
                power,
                order: 1,
            })
        })
        .collect::<Vec<_>>()
        .into()
}

impl From<Vec<Arrival>> for ArrivalList {
    fn from(arrivals: Vec<Arrival>) -> Self {
        Self::new(arrivals)
    }
}

/// Second-bounce element as seen by one detector branch.
#[derive(Debug, Clone, Copy)]
struct VisibleElement {
    index: usize,
    /// Detector power per watt incident on the element.
    gain: f64,
    distance: f64,
}

fn visible_elements(d: &DetectorBranch, rx: &Vec3, mesh: &[SurfaceElement]) -> Vec<VisibleElement> {
    mesh.iter()
        .enumerate()
        .filter_map(|(index, e)| {
            let (gain, distance) = element_to_detector(e, e.reflectivity, d, rx);
            (gain > 0.0).then_some(VisibleElement {
                index,
                gain,
                distance,
            })
        })
        .collect()
}

fn second_order_from_fluxes(
    fluxes: &[ElementFlux],
    visible: &[VisibleElement],
    mesh: &[SurfaceElement],
    settings: &ChannelSettings,
) -> ArrivalList {
    if visible.is_empty() {
        return ArrivalList::default();
    }
    let chunks: Vec<Vec<Arrival>> = mesh
        .par_iter()
        .zip(fluxes.par_iter())
        .map(|(e1, f1)| {
            let mut out = Vec::new();
            if f1.reemitted <= 0.0 {
                return out;
            }
            for v in visible {
                let e2 = &mesh[v.index];
                if e2.surface == e1.surface {
                    continue;
                }
                let (dir, d12) = ray(&e1.center, &e2.center);
                let cos_out = e1.normal.dot(&dir);
                let cos_in = -e2.normal.dot(&dir);
                if cos_out <= 0.0 || cos_in <= 0.0 {
                    continue;
                }
                let incident = f1.reemitted * FRAC_1_PI * cos_out * e2.area * cos_in / (d12 * d12);
                let power = incident * v.gain;
                if power > 0.0 {
                    out.push(Arrival {
                        time: (f1.distance + d12 + v.distance) / settings.speed_of_light,
                        power,
                        order: 2,
                    });
                }
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Double-bounce paths over element pairs on different surfaces of `mesh`.
pub fn second_order_arrivals(
    b: &Beam,
    d: &DetectorBranch,
    rx: &Vec3,
    mesh: &[SurfaceElement],
    settings: &ChannelSettings,
) -> ArrivalList {
    let fluxes = element_fluxes(b, mesh);
    let visible = visible_elements(d, rx, mesh);
    second_order_from_fluxes(&fluxes, &visible, mesh, settings)
}

/// Arrivals at every branch of a receiver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelResponse {
    pub per_branch: Vec<ArrivalList>,
}

/// All paths from `sources` to each branch of `adr`, up to `settings.max_order`.
pub fn channel_response(
    sources: &[Beam],
    adr: &Adr,
    room: &Room,
    settings: &ChannelSettings,
) -> ChannelResponse {
    let rx = adr.position;
    let active: Vec<&Beam> = sources.iter().filter(|b| b.power > 0.0).collect();
    let mut per_branch: Vec<ArrivalList> = vec![ArrivalList::default(); adr.branches.len()];

    for (list, d) in per_branch.iter_mut().zip(&adr.branches) {
        list.arrivals.extend(
            active
                .iter()
                .filter_map(|b| los_arrival(b, d, &rx, settings)),
        );
    }

    if settings.max_order >= 1 {
        for b in &active {
            let fluxes = element_fluxes(b, &room.fine);
            for (list, d) in per_branch.iter_mut().zip(&adr.branches) {
                list.extend(first_order_from_fluxes(
                    &fluxes, d, &rx, &room.fine, settings,
                ));
            }
        }
    }

    if settings.max_order >= 2 {
        let visible: Vec<Vec<VisibleElement>> = adr
            .branches
            .iter()
            .map(|d| visible_elements(d, &rx, &room.coarse))
            .collect();
        for b in &active {
            let fluxes = element_fluxes(b, &room.coarse);
            for (list, vis) in per_branch.iter_mut().zip(&visible) {
                list.extend(second_order_from_fluxes(
                    &fluxes,
                    vis,
                    &room.coarse,
                    settings,
                ));
            }
        }
    }

    for list in &mut per_branch {
        list.sort_canonical();
    }
    ChannelResponse { per_branch }
}

/// Power-preserving histogram of arrival times.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub bin_width: f64,
    pub t0: f64,
    pub bins: Vec<f64>,
}

impl ImpulseResponse {
    pub fn total_power(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Two-column text: bin start time (s), power (W).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# time_s power_W\n");
        for (i, p) in self.bins.iter().enumerate() {
            let t = self.t0 + i as f64 * self.bin_width;
            let _ = writeln!(out, "{t:.9e} {p:.9e}");
        }
        out
    }
}

/// Arrival times within this fraction of a bin of its upper edge go to the next bin.
const BIN_EDGE_SLACK: f64 = 1e-9;

pub fn bin_arrivals(a: &ArrivalList, bin_width: f64) -> Result<ImpulseResponse> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::invalid(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let Some(t0) = a.earliest() else {
        return Ok(ImpulseResponse {
            bin_width,
            t0: 0.0,
            bins: Vec::new(),
        });
    };
    let index = |t: f64| ((t - t0) / bin_width + BIN_EDGE_SLACK).floor() as usize;
    let n = a.iter().map(|x| index(x.time)).max().unwrap_or(0) + 1;
    let mut bins = vec![0.0; n];
    for x in a.iter() {
        bins[index(x.time)] += x.power;
    }
    Ok(ImpulseResponse {
        bin_width,
        t0,
        bins,
    })
}
