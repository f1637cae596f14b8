// SPDX-License-Identifier: MIT OR Apache-2.0

//! Window-vs-centroid dissimilarity measures.

use rand::seq::index::sample;
use rand::Rng;

use crate::config::Window;
use crate::error::{Error, Result};
use crate::vae::VaeModel;

/// Scalars pooled by the median heuristic.
pub const BANDWIDTH_SUBSAMPLE: usize = 200;
/// Lower bound on the heuristic bandwidth.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// A configured dissimilarity measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Squared gap between the two arithmetic means.
    Mean,
    /// Biased MMD² with an RBF kernel of the given bandwidth.
    Mmd { bandwidth: f64 },
    /// Squared distance between encoder means.
    Vae(Box<VaeModel>),
}

impl Measure {
    pub fn score(&self, window: &[f64], centroid: &[f64]) -> Result<f64> {
        match self {
            Measure::Mean => mean_score(window, centroid),
            Measure::Mmd { bandwidth } => mmd_score(window, centroid, *bandwidth),
            Measure::Vae(model) => vae_score(window, centroid, model),
        }
    }

    /// Scores every window against one centroid. Equal, bit for bit, to
    /// calling [`Measure::score`] per window; MMD reuses the centroid's
    /// self-kernel term.
    pub fn score_all(&self, windows: &[Window], centroid: &[f64]) -> Result<Vec<f64>> {
        match self {
            Measure::Mmd { bandwidth } => {
                let gamma = mmd_gamma(*bandwidth)?;
                check_finite(centroid)?;
                if centroid.is_empty() {
                    return Err(Error::Empty);
                }
                let kmm = mean_kernel_self(centroid, gamma);
                windows
                    .iter()
                    .map(|w| {
                        check_lengths(&w.values, centroid)?;
                        check_finite(&w.values)?;
                        Ok(mmd_terms(&w.values, centroid, gamma, kmm).max(0.0))
                    })
                    .collect()
            }
            _ => windows.iter().map(|w| self.score(&w.values, centroid)).collect(),
        }
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((i, &v)) => Err(Error::NonFinite {
            index: i as u64,
            value: v,
        }),
        None => Ok(()),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(mean(window) - mean(centroid))²`.
pub fn mean_score(window: &[f64], centroid: &[f64]) -> Result<f64> {
    check_lengths(window, centroid)?;
    let d = mean(window) - mean(centroid);
    Ok(d * d)
}

#[inline]
fn rbf(x: f64, y: f64, gamma: f64) -> f64 {
    let d = x - y;
    (-gamma * d * d).exp()
}

/// Mean of `k(x, y)` over all ordered pairs.
fn mean_kernel(xs: &[f64], ys: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    for &x in xs {
        for &y in ys {
            total += rbf(x, y, gamma);
        }
    }
    total / (xs.len() * ys.len()) as f64
}

/// Mean of `k(x, x')` over all ordered pairs of one set, exploiting symmetry.
fn mean_kernel_self(xs: &[f64], gamma: f64) -> f64 {
    let n = xs.len();
    let mut off = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            off += rbf(xs[i], xs[j], gamma);
        }
    }
    (n as f64 + 2.0 * off) / (n * n) as f64
}

fn mmd_gamma(bandwidth: f64) -> Result<f64> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    Ok(1.0 / (2.0 * bandwidth * bandwidth))
}

fn mmd_terms(window: &[f64], centroid: &[f64], gamma: f64, kmm: f64) -> f64 {
    mean_kernel_self(window, gamma) - 2.0 * mean_kernel(window, centroid, gamma) + kmm
}

/// Biased MMD² estimate before clamping. The kernel matrix is PSD, so this
/// is non-negative up to rounding.
pub fn mmd_unclamped(window: &[f64], centroid: &[f64], bandwidth: f64) -> Result<f64> {
    if window.is_empty() || centroid.is_empty() {
        return Err(Error::Empty);
    }
    let gamma = mmd_gamma(bandwidth)?;
    check_finite(window)?;
    check_finite(centroid)?;
    Ok(mmd_terms(window, centroid, gamma, mean_kernel_self(centroid, gamma)))
}

/// Biased MMD² between the entries of `window` and of `centroid`, each read
/// as a sample of a one-dimensional distribution, with kernel
/// `exp(-(x - y)² / (2 bandwidth²))`. Clamped at zero.
pub fn mmd_score(window: &[f64], centroid: &[f64], bandwidth: f64) -> Result<f64> {
    check_lengths(window, centroid)?;
    Ok(mmd_unclamped(window, centroid, bandwidth)?.max(0.0))
}

/// Median heuristic: the median absolute pairwise gap between scalars pooled
/// from `samples` (at most [`BANDWIDTH_SUBSAMPLE`] of them, drawn at random
/// when there are more), floored at [`BANDWIDTH_FLOOR`].
pub fn median_bandwidth<R: Rng + ?Sized>(samples: &[Window], rng: &mut R) -> f64 {
    let pooled: Vec<f64> = samples.iter().flat_map(|w| w.values.iter().copied()).collect();
    let picked: Vec<f64> = if pooled.len() > BANDWIDTH_SUBSAMPLE {
        let mut idx = sample(rng, pooled.len(), BANDWIDTH_SUBSAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pooled[i]).collect()
    } else {
        pooled
    };
    median_pairwise_gap(&picked).max(BANDWIDTH_FLOOR)
}

fn median_pairwise_gap(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut gaps = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            gaps.push((values[i] - values[j]).abs());
        }
    }
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        0.5 * (gaps[mid - 1] + gaps[mid])
    }
}

/// `‖mu_z(window) - mu_z(centroid)‖²` through the encoder mean path.
pub fn vae_score(window: &[f64], centroid: &[f64], model: &VaeModel) -> Result<f64> {
    check_lengths(window, centroid)?;
    let a = model.encode_mean(window)?;
    let b = model.encode_mean(centroid)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum())
}
