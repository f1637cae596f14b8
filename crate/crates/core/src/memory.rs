// SPDX-License-Identifier: MIT OR Apache-2.0

//! Memory of representative windows: centroid, adaptive threshold and the
//! three resampling schemes used by the update phase.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DetectorConfig, Scheme, Window};
use crate::dissimilarity::{median_bandwidth, Measure};
use crate::error::{Error, Result};

/// The stored distribution of the current regime.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Memory {
    pub samples: Vec<Window>,
    pub centroid: Vec<f64>,
    pub threshold: f64,
    /// Windows offered to the memory since the last reset; drives reservoir
    /// acceptance.
    pub seen_count: u64,
}

impl Memory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.centroid.clear();
        self.threshold = 0.0;
        self.seen_count = 0;
    }

    /// Recomputes the cached centroid from the current samples.
    pub fn refresh_centroid(&mut self) -> Result<()> {
        self.centroid = centroid(&self.samples)?;
        Ok(())
    }
}

/// Element-wise mean of the sample windows.
pub fn centroid(samples: &[Window]) -> Result<Vec<f64>> {
    let first = samples.first().ok_or(Error::Empty)?;
    let w = first.len();
    let mut acc = vec![0.0; w];
    for s in samples {
        if s.len() != w {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: w,
            });
        }
        for (a, v) in acc.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    let n = samples.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Quantile by linear interpolation between order statistics at position
/// `(n - 1) p` of the sorted values.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("quantile p={p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// `alpha · Q(S, p)` where `S` holds each sample's dissimilarity to `centroid`.
pub fn compute_threshold(
    samples: &[Window],
    centroid: &[f64],
    measure: &Measure,
    alpha: f64,
    p: f64,
) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let scores = measure.score_all(samples, centroid)?;
    Ok(alpha * quantile(&scores, p)?)
}

/// Uniform `m`-subset of `memory ∪ buffer` drawn without replacement, or
/// the whole union when it already fits.
pub fn update_random<R: Rng + ?Sized>(
    memory: &[Window],
    buffer: &[Window],
    m: usize,
    rng: &mut R,
) -> Vec<Window> {
    let total = memory.len() + buffer.len();
    let union = memory.iter().chain(buffer);
    if total <= m {
        return union.cloned().collect();
    }
    let mut keep = sample(rng, total, m).into_vec();
    keep.sort_unstable();
    let union: Vec<&Window> = union.collect();
    keep.into_iter().map(|i| union[i].clone()).collect()
}

/// Offers one window to a reservoir of capacity `m`: kept outright while
/// there is room, otherwise accepted with probability `m / i` into a
/// uniformly chosen slot, `i` being the updated `seen_count`.
pub fn update_reservoir<R: Rng + ?Sized>(
    memory: &mut Memory,
    window: Window,
    m: usize,
    rng: &mut R,
) {
    memory.seen_count += 1;
    if memory.samples.len() < m {
        memory.samples.push(window);
        return;
    }
    let j = rng.gen_range(0..memory.seen_count);
    if (j as usize) < m {
        memory.samples[j as usize] = window;
    }
}

/// The `m` windows of `memory ∪ buffer` nearest (Euclidean) to their
/// element-wise mean. Ties go to the earlier start index.
pub fn update_prototype(memory: &[Window], buffer: &[Window], m: usize) -> Result<Vec<Window>> {
    let union: Vec<&Window> = memory.iter().chain(buffer).collect();
    if union.is_empty() {
        return Err(Error::Empty);
    }
    if union.len() <= m {
        return Ok(union.into_iter().cloned().collect());
    }
    let owned: Vec<Window> = union.iter().map(|w| (*w).clone()).collect();
    let mean = centroid(&owned)?;
    let mut ranked: Vec<(f64, u64, usize)> = owned
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let d2: f64 = w.values.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, w.start, i)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut keep: Vec<usize> = ranked.into_iter().take(m).map(|(_, _, i)| i).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| owned[i].clone()).collect())
}

/// What an update phase changed.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub threshold: f64,
    pub bandwidth: Option<f64>,
}

/// One update phase, strictly in this order:
/// 1. threshold from the current samples and current centroid,
/// 2. resample `memory ∪ buffer` under `cfg.scheme`,
/// 3. centroid from the new samples,
/// 4. median-heuristic bandwidth refresh (MMD without a fixed bandwidth).
///
/// Clearing the buffer is left to the caller.
pub fn run_update_phase<R: Rng + ?Sized>(
    memory: &mut Memory,
    buffer: &[Window],
    cfg: &DetectorConfig,
    measure: &mut Measure,
    rng: &mut R,
) -> Result<UpdateOutcome> {
    let threshold = compute_threshold(
        &memory.samples,
        &memory.centroid,
        measure,
        cfg.alpha,
        cfg.quantile,
    )?;
    memory.threshold = threshold;

    match cfg.scheme {
        Scheme::Random => {
            memory.samples = update_random(&memory.samples, buffer, cfg.memory, rng);
            memory.seen_count += buffer.len() as u64;
        }
        Scheme::Reservoir => {
            for w in buffer {
                update_reservoir(memory, w.clone(), cfg.memory, rng);
            }
        }
        Scheme::Prototype => {
            memory.samples = update_prototype(&memory.samples, buffer, cfg.memory)?;
            memory.seen_count += buffer.len() as u64;
        }
    }
    memory.refresh_centroid()?;

    let mut bandwidth = None;
    if let Measure::Mmd { bandwidth: bw } = measure {
        if cfg.mmd_bandwidth.is_none() {
            *bw = median_bandwidth(&memory.samples, rng);
        }
        bandwidth = Some(*bw);
    }
    Ok(UpdateOutcome {
        threshold,
        bandwidth,
    })
}
