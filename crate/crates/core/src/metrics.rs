//! Link and lighting metrics: RMS delay spread, OOK SNR and BER, achievable
//! bit rate, and illuminance on a horizontal plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::channel::{ArrivalList, ChannelResponse};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::sources::Beam;

pub const ELECTRON_CHARGE: f64 = 1.602e-19;

/// SNR for BER 1e-9 with on-off keying (Q = 6).
pub const OOK_TARGET_SNR_DB: f64 = 15.6;

/// SNRs closer than this are treated as equal when ranking.
pub const SNR_TIE_DB: f64 = 1e-9;

/// Receiver noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Preamplifier input current noise density (A/√Hz).
    pub preamp_current_density: f64,
    /// Background photocurrent (A).
    pub background_current: f64,
    pub electron_charge: f64,
    /// Receiver bandwidth as a multiple of the bit rate.
    pub bandwidth_factor: f64,
    /// Include shot noise from the signal photocurrent.
    pub signal_shot_noise: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            preamp_current_density: 4.5e-12,
            background_current: 0.0,
            electron_charge: ELECTRON_CHARGE,
            bandwidth_factor: 0.7,
            signal_shot_noise: true,
        }
    }
}

impl NoiseModel {
    /// Preamplifier noise only.
    pub fn preamp_only(density: f64, bandwidth_factor: f64) -> Self {
        Self {
            preamp_current_density: density,
            background_current: 0.0,
            bandwidth_factor,
            signal_shot_noise: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("preamp_current_density", self.preamp_current_density),
            ("background_current", self.background_current),
            ("electron_charge", self.electron_charge),
            ("bandwidth_factor", self.bandwidth_factor),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Noise current standard deviation (A) with mean optical power `p`.
    pub fn sigma(&self, p: f64, responsivity: f64, bandwidth: f64) -> f64 {
        let signal = if self.signal_shot_noise {
            responsivity * p
        } else {
            0.0
        };
        let shot = 2.0 * self.electron_charge * (signal + self.background_current) * bandwidth;
        let preamp = self.preamp_current_density.powi(2) * bandwidth;
        (shot + preamp).sqrt()
    }
}

/// RMS delay spread (s) about the power-weighted mean delay.
pub fn delay_spread(a: &ArrivalList) -> Result<f64> {
    let total = a.total_power();
    if a.is_empty() || !(total > 0.0) {
        return Err(Error::UndefinedMetric(
            "delay spread of an empty or zero-power channel".into(),
        ));
    }
    let t_ref = a.earliest().unwrap_or(0.0);
    let mean = a.iter().map(|x| x.power * (x.time - t_ref)).sum::<f64>() / total;
    let var = a
        .iter()
        .map(|x| {
            let dt = x.time - t_ref - mean;
            x.power * dt * dt
        })
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

/// OOK signal-to-noise ratio in dB, `[R(P1 − P0)/(σ1 + σ0)]²`.
///
/// Returns `-inf` for a closed eye and `+inf` when the link is noiseless.
pub fn snr_ook(
    p1: f64,
    p0: f64,
    responsivity: f64,
    noise: &NoiseModel,
    bit_rate: f64,
) -> Result<f64> {
    if !(bit_rate > 0.0) {
        return Err(Error::invalid(format!(
            "bit rate must be positive, got {bit_rate}"
        )));
    }
    if !(p0 >= 0.0) || !(p1 >= p0) {
        return Err(Error::invalid(format!(
            "need p1 >= p0 >= 0, got p1={p1}, p0={p0}"
        )));
    }
    let bw = noise.bandwidth_factor * bit_rate;
    let sigma = noise.sigma(p1, responsivity, bw) + noise.sigma(p0, responsivity, bw);
    let swing = responsivity * (p1 - p0);
    if sigma == 0.0 {
        return if swing > 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::UndefinedMetric(
                "noiseless link with a closed eye".into(),
            ))
        };
    }
    let ratio = swing / sigma;
    Ok(10.0 * (ratio * ratio).log10())
}

/// Splits received power into the part arriving within one bit period of the
/// first arrival (`p1`) and the part spilling into later bits (`p0`).
pub fn p1_p0_from_arrivals(a: &ArrivalList, bit_rate: f64) -> (f64, f64) {
    let Some(t_first) = a.earliest() else {
        return (0.0, 0.0);
    };
    let period = 1.0 / bit_rate;
    a.iter().fold((0.0, 0.0), |(p1, p0), x| {
        if x.time - t_first < period {
            (p1 + x.power, p0)
        } else {
            (p1, p0 + x.power)
        }
    })
}

/// Bit error rate `Q(√SNR)` for an SNR given in dB.
pub fn q_to_ber(snr_db: f64) -> f64 {
    if snr_db == f64::NEG_INFINITY {
        return 0.5;
    }
    let q = 10f64.powf(snr_db / 10.0).sqrt();
    0.5 * erfc(q / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    /// Use the single best receiver branch.
    #[default]
    SelectBest,
    /// Sum the linear SNRs of all branches.
    MaximalRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub received_power_p1: f64,
    pub received_power_p0: f64,
    pub delay_spread: f64,
    pub snr_db: f64,
    pub best_branch_index: usize,
}

/// Index of the largest value; values within [`SNR_TIE_DB`] of the running
/// best keep the earlier index.
pub fn argmax_with_ties(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let bv = values[b];
                if v > bv && !(v - bv <= SNR_TIE_DB) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Per-branch SNR in dB; branches that receive nothing, or whose eye is
/// closed by late power, score `-inf`.
pub fn branch_snrs(
    response: &ChannelResponse,
    responsivity: f64,
    noise: &NoiseModel,
    bit_rate: f64,
) -> Result<Vec<f64>> {
    response
        .per_branch
        .iter()
        .map(|list| {
            if list.is_empty() {
                return Ok(f64::NEG_INFINITY);
            }
            let (p1, p0) = p1_p0_from_arrivals(list, bit_rate);
            if p1 <= p0 {
                // more power spills into later bits than lands in the current one
                return Ok(f64::NEG_INFINITY);
            }
            snr_ook(p1, p0, responsivity, noise, bit_rate)
        })
        .collect()
}

/// Receiver metrics at `bit_rate` under the given combining rule.
pub fn link_metrics(
    response: &ChannelResponse,
    responsivity: f64,
    noise: &NoiseModel,
    bit_rate: f64,
    combining: Combining,
) -> Result<LinkMetrics> {
    let snrs = branch_snrs(response, responsivity, noise, bit_rate)?;
    let best = argmax_with_ties(&snrs)
        .filter(|&i| snrs[i] > f64::NEG_INFINITY)
        .ok_or_else(|| Error::UndefinedMetric("no receiver branch collects any power".into()))?;
    let list = &response.per_branch[best];
    let (p1, p0) = p1_p0_from_arrivals(list, bit_rate);
    let snr_db = match combining {
        Combining::SelectBest => snrs[best],
        Combining::MaximalRatio => {
            let linear: f64 = snrs.iter().map(|s| 10f64.powf(s / 10.0)).sum();
            10.0 * linear.log10()
        }
    };
    Ok(LinkMetrics {
        received_power_p1: p1,
        received_power_p0: p0,
        delay_spread: delay_spread(list)?,
        snr_db,
        best_branch_index: best,
    })
}

/// Outcome of scanning a bit-rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateScan {
    /// Largest grid rate meeting the target, if any.
    pub max_rate: Option<f64>,
    /// SNR evaluated at each grid rate.
    pub snr_db: Vec<f64>,
    /// Whether SNR was non-increasing along the sorted grid.
    pub monotone: bool,
}

/// Largest rate in `rates` whose SNR from `evaluate` reaches `target_snr_db`.
///
/// Every grid point is evaluated; monotonicity is reported, not assumed.
pub fn max_data_rate<F>(evaluate: F, rates: &[f64], target_snr_db: f64) -> Result<RateScan>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let snr_db = sorted
        .par_iter()
        .map(|&r| evaluate(r))
        .collect::<Result<Vec<_>>>()?;
    let monotone = snr_db.windows(2).all(|w| w[1] <= w[0]);
    let max_rate = sorted
        .iter()
        .zip(&snr_db)
        .filter(|(_, &s)| s >= target_snr_db)
        .map(|(&r, _)| r)
        .next_back();
    Ok(RateScan {
        max_rate,
        snr_db,
        monotone,
    })
}

/// Direct illuminance (lx) on an upward-facing horizontal surface at `point`.
pub fn illuminance_at<'a>(point: &Vec3, beams: impl IntoIterator<Item = &'a Beam>) -> f64 {
    beams
        .into_iter()
        .map(|b| {
            let v = point - b.position;
            let d2 = v.norm_squared();
            if !(d2 > 0.0) {
                return 0.0;
            }
            let d = d2.sqrt();
            let dir = v / d;
            let cos_theta = -dir.z;
            if cos_theta <= 0.0 {
                return 0.0;
            }
            b.luminous_intensity(&dir) * cos_theta / d2
        })
        .sum()
}

/// Illuminance sampled on a regular grid over a horizontal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminanceGrid {
    pub pitch: f64,
    pub z: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major: `values[iy * xs.len() + ix]`.
    pub values: Vec<f64>,
}

impl IlluminanceGrid {
    pub fn compute(beams: &[Beam], width: f64, length: f64, z: f64, pitch: f64) -> Result<Self> {
        if !(pitch > 0.0) {
            return Err(Error::invalid(format!(
                "grid pitch must be positive, got {pitch}"
            )));
        }
        let axis = |extent: f64| -> Vec<f64> {
            let n = (extent / pitch + 1e-9).floor() as usize;
            (0..=n).map(|i| i as f64 * pitch).collect()
        };
        let xs = axis(width);
        let ys = axis(length);
        let values = ys
            .par_iter()
            .flat_map_iter(|&y| {
                xs.iter()
                    .map(move |&x| illuminance_at(&Vec3::new(x, y, z), beams.iter()))
            })
            .collect();
        Ok(Self {
            pitch,
            z,
            xs,
            ys,
            values,
        })
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Flux scale that moves the grid minimum from `current_min` to `target_min`.
pub fn calibrate_flux(current_min: f64, target_min: f64) -> Result<f64> {
    if !(current_min > 0.0) || !current_min.is_finite() {
        return Err(Error::Calibration(format!(
            "current minimum illuminance is {current_min} lx"
        )));
    }
    if !(target_min > 0.0) {
        return Err(Error::Calibration(format!(
            "target must be positive, got {target_min}"
        )));
    }
    Ok(target_min / current_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Arrival;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn taps(v: &[(f64, f64)]) -> ArrivalList {
        v.iter()
            .map(|&(time, power)| Arrival {
                time,
                power,
                order: 0,
            })
            .collect()
    }

    #[test]
    fn delay_spread_examples() {
        assert_eq!(delay_spread(&taps(&[(3e-9, 1.0)])).unwrap(), 0.0);
        let d = delay_spread(&taps(&[(0.0, 1.0), (1e-9, 1.0)])).unwrap();
        assert!((d - 0.5e-9).abs() < 1e-21);
        let d = delay_spread(&taps(&[(1e-9, 1e-6), (2e-9, 3e-6)])).unwrap();
        assert!((d - 0.1875f64.sqrt() * 1e-9).abs() < 1e-21);
        assert!(delay_spread(&ArrivalList::default()).is_err());
        assert!(delay_spread(&taps(&[(1e-9, 0.0)])).is_err());
    }

    #[test]
    fn snr_examples() {
        let noise = NoiseModel::default();
        assert_eq!(
            snr_ook(1e-6, 1e-6, 0.4, &noise, 1e9).unwrap(),
            f64::NEG_INFINITY
        );

        let pre = NoiseModel::preamp_only(4.5e-12, 0.7);
        let a = snr_ook(1e-6, 0.0, 0.4, &pre, 1e10).unwrap();
        let b = snr_ook(2e-6, 0.0, 0.4, &pre, 1e10).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-9);

        // (4e-7 / (2 × 3.765e-7))² = 0.2823
        let s = snr_ook(1e-6, 0.0, 0.4, &pre, 1e10).unwrap();
        assert!((s - (-5.493)).abs() < 0.01, "{s}");

        let silent = NoiseModel::preamp_only(0.0, 0.7);
        assert_eq!(
            snr_ook(1e-6, 0.0, 0.4, &silent, 1e9).unwrap(),
            f64::INFINITY
        );
        assert!(snr_ook(1e-6, 1e-6, 0.4, &silent, 1e9).is_err());
        assert!(snr_ook(1e-6, 0.0, 0.4, &noise, 0.0).is_err());
        assert!(snr_ook(1e-7, 1e-6, 0.4, &noise, 1e9).is_err());
    }

    #[test]
    fn eye_split() {
        let a = taps(&[(1e-9, 1.0), (1.01e-9, 2.0)]);
        assert_eq!(p1_p0_from_arrivals(&a, 1e9), (3.0, 0.0));
        let a = taps(&[(0.0, 1.0), (1e-9, 1.0)]);
        assert_eq!(p1_p0_from_arrivals(&a, 1e9), (1.0, 1.0));
    }

    #[test]
    fn ber_examples() {
        assert_eq!(q_to_ber(f64::NEG_INFINITY), 0.5);
        let snr_q6 = 10.0 * 36f64.log10();
        assert!((snr_q6 - 15.56).abs() < 0.01);
        let ber = q_to_ber(snr_q6);
        assert!(((ber - 9.87e-10) / 9.87e-10).abs() < 0.02, "{ber}");
    }

    #[test]
    fn rate_scan() {
        let eval = |r: f64| Ok(40.0 - r / 1e9);
        let grid: Vec<f64> = (1..=30).map(|g| g as f64 * 1e9).collect();
        let s = max_data_rate(eval, &grid, 15.6).unwrap();
        assert_eq!(s.max_rate, Some(24e9));
        assert!(s.monotone);
        let none = max_data_rate(|_| Ok(3.0), &grid, 15.6).unwrap();
        assert_eq!(none.max_rate, None);
        let all = max_data_rate(|_| Ok(3.0), &grid, 0.0).unwrap();
        assert_eq!(all.max_rate, Some(30e9));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_with_ties(&[1.0, 3.0, 3.0 + 1e-12, 2.0]), Some(1));
        assert_eq!(
            argmax_with_ties(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            Some(0)
        );
        assert_eq!(argmax_with_ties(&[]), None);
    }

    #[test]
    fn illuminance_directly_below() {
        let b = Beam::new(Vec3::new(1.0, 1.0, 3.0), -Vec3::z(), 1.0, 0.0, 1000.0).unwrap();
        let e = illuminance_at(&Vec3::new(1.0, 1.0, 0.0), [&b]);
        assert!((e - 1000.0 * 2.0 / (2.0 * PI) / 9.0).abs() < 1e-12);
        let dark = Beam::new(Vec3::new(1.0, 1.0, 3.0), -Vec3::z(), 1.0, 1.0, 0.0).unwrap();
        assert_eq!(illuminance_at(&Vec3::new(2.0, 1.0, 0.0), [&dark]), 0.0);
    }

    #[test]
    fn grid_shape_and_calibration() {
        let b = Beam::new(Vec3::new(2.0, 4.0, 3.0), -Vec3::z(), 0.6463, 0.0, 500.0).unwrap();
        let g = IlluminanceGrid::compute(&[b], 4.0, 8.0, 0.0, 0.1).unwrap();
        assert_eq!((g.xs.len(), g.ys.len()), (41, 81));
        assert_eq!(calibrate_flux(156.85, 313.7).unwrap(), 2.0);
        assert_eq!(calibrate_flux(313.7, 313.7).unwrap(), 1.0);
        assert!(calibrate_flux(0.0, 313.7).is_err());
    }

    proptest! {
        #[test]
        fn delay_spread_invariances(
            raw in prop::collection::vec((0.0f64..50e-9, 1e-9f64..1.0), 1..40),
            k in 1e-6f64..1e6,
            shift in -10e-9f64..10e-9,
        ) {
            let base = taps(&raw);
            let d = delay_spread(&base).unwrap();
            let scaled: ArrivalList = raw.iter().map(|&(t, p)| Arrival { time: t, power: p * k, order: 0 }).collect();
            let shifted: ArrivalList = raw.iter().map(|&(t, p)| Arrival { time: t + 20e-9 + shift, power: p, order: 0 }).collect();
            let mut doubled = base.clone();
            doubled.extend(base.clone());
            let tol = 1e-9 * d.max(1e-15);
            prop_assert!((delay_spread(&scaled).unwrap() - d).abs() <= tol.max(1e-24));
            prop_assert!((delay_spread(&shifted).unwrap() - d).abs() <= 1e-6 * d + 1e-20);
            prop_assert!((delay_spread(&doubled).unwrap() - d).abs() <= tol.max(1e-24));
        }

        #[test]
        fn snr_monotone(p0 in 0.0f64..1e-5, gap in 1e-9f64..1e-5, extra in 1e-9f64..1e-5, rate in 1e8f64..3e10) {
            let noise = NoiseModel::default();
            let s = snr_ook(p0 + gap, p0, 0.4, &noise, rate).unwrap();
            prop_assert!(snr_ook(p0 + gap + extra, p0, 0.4, &noise, rate).unwrap() > s);
            prop_assert!(snr_ook(p0 + gap, p0, 0.4, &noise, rate * 1.5).unwrap() < s);
        }

        #[test]
        fn ber_bounded_and_decreasing(a in -30.0f64..16.0, b in -30.0f64..16.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (blo, bhi) = (q_to_ber(lo), q_to_ber(hi));
            prop_assert!(bhi > 0.0 && blo <= 0.5);
            if hi - lo > 1e-6 {
                prop_assert!(bhi < blo);
            }
        }

        #[test]
        fn single_tap_never_spills(t in 0.0f64..1e-7, rate in 1e6f64..1e11) {
            let (_, p0) = p1_p0_from_arrivals(&taps(&[(t, 1.0)]), rate);
            prop_assert_eq!(p0, 0.0);
        }

        #[test]
        fn illuminance_linear_in_flux(k in 0.01f64..100.0, x in 0.0f64..4.0, y in 0.0f64..8.0) {
            let b = Beam::new(Vec3::new(2.0, 4.0, 3.0), -Vec3::z(), 0.6463, 0.0, 250.0).unwrap();
            let p = Vec3::new(x, y, 0.0);
            let e = illuminance_at(&p, [&b]);
            let ek = illuminance_at(&p, [&b.scaled(k)]);
            prop_assert!((ek - k * e).abs() <= 1e-12 * ek.abs());
        }
    }
}
