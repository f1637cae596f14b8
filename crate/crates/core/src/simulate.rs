// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data generators: fuel variance reconciliation, bottom-of-tank leak
//! injection onto a synthetic variance series, and the jumping-mean and
//! Gaussian-mixture change point benchmarks.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-hour intervals per day.
pub const SAMPLES_PER_DAY: usize = 48;
/// Samples in one 30-day month.
pub const SAMPLES_PER_MONTH: usize = 30 * SAMPLES_PER_DAY;
/// Earliest leak onset: two months of normal operation.
pub const MIN_LEAK_START: usize = 2 * SAMPLES_PER_MONTH;
/// Shortest leak: three months.
pub const MIN_LEAK_DURATION: usize = 3 * SAMPLES_PER_MONTH;

/// A series with its true change points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub values: Vec<f64>,
    pub cps: Vec<usize>,
}

impl LabeledSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Measured closing volume minus the volume implied by the opening volume,
/// sales and deliveries.
pub fn fuel_variance(open: f64, close: f64, sales: f64, delivery: f64) -> f64 {
    close - (open - sales + delivery)
}

/// Leak rate drawn uniformly within ±30% of `avg` (gallons per hour).
pub fn sample_leak_rate<R: Rng + ?Sized>(avg: f64, rng: &mut R) -> Result<f64> {
    if !(avg.is_finite() && avg > 0.0) {
        return Err(Error::InvalidArgument(format!("average leak rate must be > 0, got {avg}")));
    }
    Ok(Uniform::new_inclusive(0.7 * avg, 1.3 * avg).sample(rng))
}

/// Gallons lost in one 30-minute interval by a bottom-of-tank leak:
/// `0.5 · lr · sqrt(h / h_max)`.
pub fn leak_volume_per_interval(lr: f64, h: f64, h_max: f64) -> Result<f64> {
    if !(h_max > 0.0) {
        return Err(Error::InvalidArgument(format!("h_max must be > 0, got {h_max}")));
    }
    if !(0.0..=h_max).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "product level {h} outside [0, {h_max}]"
        )));
    }
    Ok(0.5 * lr * (h / h_max).sqrt())
}

/// One simulated leak on one tank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakScenario {
    pub avg_rate: f64,
    pub drawn_rate: f64,
    pub start_idx: usize,
    pub stop_idx: usize,
    /// Product level per interval.
    pub h_series: Vec<f64>,
    /// Maximum product level of each 30-day month.
    pub h_max: Vec<f64>,
}

impl LeakScenario {
    /// Monthly maximum level governing interval `idx`.
    pub fn h_max_at(&self, idx: usize) -> f64 {
        self.h_max[idx / SAMPLES_PER_MONTH]
    }
}

/// Per-month maxima of a level series.
pub fn monthly_max(levels: &[f64]) -> Vec<f64> {
    levels
        .chunks(SAMPLES_PER_MONTH)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Subtracts the per-interval leak volume over `[start_idx, stop_idx)`.
/// Onset and repair are both change points.
pub fn inject_leak(base_variance: &[f64], scenario: &LeakScenario) -> Result<LabeledSeries> {
    let len = base_variance.len();
    let (start, stop) = (scenario.start_idx, scenario.stop_idx);
    if scenario.h_series.len() != len {
        return Err(Error::LengthMismatch {
            left: scenario.h_series.len(),
            right: len,
        });
    }
    if scenario.h_max.len() != len.div_ceil(SAMPLES_PER_MONTH) {
        return Err(Error::InvalidArgument("h_max must hold one entry per month".into()));
    }
    if start < MIN_LEAK_START {
        return Err(Error::InvalidArgument(format!(
            "leak start {start} is earlier than {MIN_LEAK_START}"
        )));
    }
    if stop < start + MIN_LEAK_DURATION {
        return Err(Error::InvalidArgument(format!(
            "leak [{start}, {stop}) is shorter than {MIN_LEAK_DURATION} samples"
        )));
    }
    if stop >= len {
        return Err(Error::InvalidArgument(format!(
            "leak stop {stop} must fall inside the series of length {len}"
        )));
    }
    let mut values = base_variance.to_vec();
    for (i, v) in values.iter_mut().enumerate().take(stop).skip(start) {
        *v -= leak_volume_per_interval(
            scenario.drawn_rate,
            scenario.h_series[i],
            scenario.h_max_at(i),
        )?;
    }
    Ok(LabeledSeries {
        values,
        cps: vec![start, stop],
    })
}

/// Synthetic stand-in for a tank's idle-period variance stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlParams {
    pub length: usize,
    /// Standard deviation of the base variance noise (gallons).
    pub sigma: f64,
    pub avg_rate: f64,
    pub trend_amplitude: f64,
    pub trend_period: usize,
    /// Samples between refills of the sawtooth level series.
    pub refill_period: usize,
    /// Level right after a refill.
    pub full_level: f64,
    /// Level just before a refill, as a fraction of `full_level`.
    pub low_fraction: f64,
    /// Samples kept leak-free after the repair.
    pub tail: usize,
}

impl Default for FlParams {
    fn default() -> Self {
        Self {
            length: 20_000,
            sigma: 0.8,
            avg_rate: 0.2,
            trend_amplitude: 0.0,
            trend_period: 7 * SAMPLES_PER_DAY,
            refill_period: 7 * SAMPLES_PER_DAY,
            full_level: 2000.0,
            low_fraction: 0.3,
            tail: 1000,
        }
    }
}

/// Generates a base variance series, a sawtooth product level and a leak
/// whose onset and repair are drawn uniformly over the admissible range.
pub fn gen_fl<R: Rng + ?Sized>(params: &FlParams, rng: &mut R) -> Result<(LabeledSeries, LeakScenario)> {
    let len = params.length;
    let latest_start = len
        .checked_sub(MIN_LEAK_DURATION + params.tail + 1)
        .filter(|&s| s >= MIN_LEAK_START)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "length {len} too short for a leak (need at least {})",
                MIN_LEAK_START + MIN_LEAK_DURATION + params.tail + 1
            ))
        })?;
    if !(params.sigma >= 0.0 && params.sigma.is_finite()) {
        return Err(Error::InvalidArgument("sigma must be finite and >= 0".into()));
    }
    if params.refill_period == 0 || params.trend_period == 0 {
        return Err(Error::InvalidArgument("periods must be positive".into()));
    }
    if !(params.full_level > 0.0) || !(0.0..=1.0).contains(&params.low_fraction) {
        return Err(Error::InvalidArgument("level settings out of range".into()));
    }

    let noise = Normal::new(0.0, params.sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let phase = rng.gen_range(0..params.refill_period);
    let trend_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let drop = params.full_level * (1.0 - params.low_fraction);
    let mut base = Vec::with_capacity(len);
    let mut levels = Vec::with_capacity(len);
    for t in 0..len {
        let angle = std::f64::consts::TAU * t as f64 / params.trend_period as f64 + trend_phase;
        base.push(noise.sample(rng) + params.trend_amplitude * angle.sin());
        let pos = ((t + phase) % params.refill_period) as f64 / params.refill_period as f64;
        levels.push(params.full_level - drop * pos);
    }

    let drawn_rate = sample_leak_rate(params.avg_rate, rng)?;
    let start_idx = rng.gen_range(MIN_LEAK_START..=latest_start);
    let stop_idx = rng.gen_range(start_idx + MIN_LEAK_DURATION..=len - params.tail - 1);
    let scenario = LeakScenario {
        avg_rate: params.avg_rate,
        drawn_rate,
        start_idx,
        stop_idx,
        h_max: monthly_max(&levels),
        h_series: levels,
    };
    let series = inject_leak(&base, &scenario)?;
    Ok((series, scenario))
}

/// Noise mean of jumping-mean segment `segment` (1-based):
/// 0 for the first, then each segment adds `segment / 16`.
pub fn jm_noise_mean(segment: usize) -> f64 {
    (2..=segment).map(|n| n as f64 / 16.0).sum()
}

/// Change points at every multiple of `seg_len` strictly inside the series.
fn segment_cps(num_segments: usize, seg_len: usize) -> Vec<usize> {
    (1..num_segments).map(|k| k * seg_len).collect()
}

/// AR(2) `x_i = 0.6 x_{i-1} - 0.5 x_{i-2} + e_i` with `e_i ~ N(mu_N, 1.5²)`,
/// the noise mean stepping up at each segment boundary.
pub fn gen_jumping_mean<R: Rng + ?Sized>(num_segments: usize, seg_len: usize, rng: &mut R) -> LabeledSeries {
    let mut values = Vec::with_capacity(num_segments * seg_len);
    let (mut x1, mut x2) = (0.0f64, 0.0f64);
    for seg in 1..=num_segments {
        let noise = Normal::new(jm_noise_mean(seg), 1.5).expect("valid normal");
        for _ in 0..seg_len {
            let x = 0.6 * x1 - 0.5 * x2 + noise.sample(rng);
            values.push(x);
            x2 = x1;
            x1 = x;
        }
    }
    LabeledSeries {
        values,
        cps: segment_cps(num_segments, seg_len),
    }
}

/// Draw from `weight·N(m1, s1²) + (1 - weight)·N(m2, s2²)`.
fn mixture_draw<R: Rng + ?Sized>(rng: &mut R, weight: f64, a: &Normal<f64>, b: &Normal<f64>) -> f64 {
    if rng.gen_bool(weight) {
        a.sample(rng)
    } else {
        b.sample(rng)
    }
}

/// Segments alternate between `0.5 N(-1, 0.5²) + 0.5 N(1, 0.5²)` (odd) and
/// `0.8 N(-1, 1) + 0.2 N(1, 0.1²)` (even).
pub fn gen_gaussian_mixture<R: Rng + ?Sized>(
    num_segments: usize,
    seg_len: usize,
    rng: &mut R,
) -> LabeledSeries {
    let a1 = Normal::new(-1.0, 0.5).unwrap();
    let a2 = Normal::new(1.0, 0.5).unwrap();
    let b1 = Normal::new(-1.0, 1.0).unwrap();
    let b2 = Normal::new(1.0, 0.1).unwrap();
    let mut values = Vec::with_capacity(num_segments * seg_len);
    for seg in 1..=num_segments {
        for _ in 0..seg_len {
            values.push(if seg % 2 == 1 {
                mixture_draw(rng, 0.5, &a1, &a2)
            } else {
                mixture_draw(rng, 0.8, &b1, &b2)
            });
        }
    }
    LabeledSeries {
        values,
        cps: segment_cps(num_segments, seg_len),
    }
}
