// SPDX-License-Identifier: MIT OR Apache-2.0

//! Online outlier filtering with singular spectrum analysis.
//!
//! The leading SSA subspace is learned from a ring of the last `history` raw
//! values; the lagged vector ending at each new value is projected onto it,
//! and the gap between the value and its reconstruction is the residual. A
//! residual beyond `k` rolling standard deviations marks an outlier, which is
//! replaced by the mean of the last few cleaned values.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};

/// Residuals required before the filter starts flagging.
const MIN_RESIDUALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    /// Ring length `N`.
    pub history: usize,
    /// Embedding (lag) length `L`.
    pub embed_len: usize,
    /// Leading components kept in the reconstruction.
    pub rank: usize,
    /// Residual threshold in rolling standard deviations.
    pub k: f64,
    /// Cleaned values averaged to impute an outlier.
    pub impute_len: usize,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            history: 100,
            embed_len: 20,
            rank: 3,
            k: 3.0,
            impute_len: 10,
        }
    }
}

impl SsaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.embed_len < 2 || 2 * self.embed_len > self.history {
            return Err(ConfigError::Ssa(format!(
                "embed_len must satisfy 2 <= L <= history/2, got L={} history={}",
                self.embed_len, self.history
            )));
        }
        if self.rank == 0 || self.rank > self.embed_len {
            return Err(ConfigError::Ssa(format!(
                "rank must lie in 1..=embed_len, got {}",
                self.rank
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(ConfigError::Ssa(format!("k must be > 0, got {}", self.k)));
        }
        if self.impute_len == 0 {
            return Err(ConfigError::Ssa("impute_len must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_ssa_args(history: &[f64], embed_len: usize, rank: usize) -> Result<()> {
    let n = history.len();
    if embed_len < 2 || n < 2 * embed_len {
        return Err(Error::InvalidArgument(format!(
            "ssa needs 2 <= L and N >= 2L, got L={embed_len} N={n}"
        )));
    }
    if rank == 0 {
        return Err(Error::InvalidArgument("ssa rank must be >= 1".into()));
    }
    if let Some((i, &v)) = history.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            index: i as u64,
            value: v,
        });
    }
    Ok(())
}

fn trajectory(history: &[f64], embed_len: usize) -> DMatrix<f64> {
    let k = history.len() - embed_len + 1;
    DMatrix::from_fn(embed_len, k, |i, j| history[i + j])
}

/// Orthonormal `L x r` basis of the leading left singular vectors of the
/// trajectory matrix, `r = min(rank, numeric rank)`.
///
/// The left singular vectors are the eigenvectors of the `L x L`
/// lag-covariance, so no full SVD is needed.
fn leading_basis(traj: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let (l, k) = traj.shape();
    let eig = SymmetricEigen::new(traj * traj.transpose());
    let vals = &eig.eigenvalues;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let largest = order.first().map_or(0.0, |&i| vals[i].max(0.0));
    // Eigenvalues are squared singular values.
    let tol = largest * (f64::EPSILON * l.max(k) as f64).powi(2);
    let numeric_rank = order.iter().filter(|&&i| vals[i] > tol).count();
    let keep = rank.min(numeric_rank);
    DMatrix::from_fn(l, keep, |i, c| eig.eigenvectors[(i, order[c])])
}

/// Rank-truncated SSA reconstruction of `history`.
///
/// Builds the `L x (N-L+1)` trajectory matrix, keeps the `rank` leading
/// singular components and diagonal-averages the result back to length `N`.
/// A rank above the numeric rank of the trajectory matrix is clamped.
pub fn ssa_reconstruct(history: &[f64], embed_len: usize, rank: usize) -> Result<Vec<f64>> {
    check_ssa_args(history, embed_len, rank)?;
    let n = history.len();
    let l = embed_len;
    let k = n - l + 1;
    let traj = trajectory(history, l);
    let basis = leading_basis(&traj, rank);
    let approx = &basis * (basis.transpose() * &traj);

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for j in 0..k {
        for i in 0..l {
            sums[i + j] += approx[(i, j)];
            counts[i + j] += 1;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s / c as f64)
        .collect())
}

/// One-step SSA fit of `x`: the lagged vector ending at `x` projected onto
/// the leading subspace of `history`'s trajectory matrix. Returns the final
/// entry of the projection, i.e. the reconstruction of `x`.
pub fn ssa_fit_next(history: &[f64], x: f64, embed_len: usize, rank: usize) -> Result<f64> {
    check_ssa_args(history, embed_len, rank)?;
    let l = embed_len;
    let basis = leading_basis(&trajectory(history, l), rank);
    let lagged = DVector::from_fn(l, |i, _| {
        if i + 1 == l {
            x
        } else {
            history[history.len() - (l - 1) + i]
        }
    });
    let coords = basis.transpose() * &lagged;
    Ok((0..basis.ncols()).map(|c| basis[(l - 1, c)] * coords[c]).sum())
}

/// Per-stream SSA filter state.
#[derive(Debug, Clone)]
pub struct SsaFilter {
    cfg: SsaConfig,
    history: VecDeque<f64>,
    residuals: VecDeque<f64>,
    recent: VecDeque<f64>,
    scratch: Vec<f64>,
}

impl SsaFilter {
    pub fn new(cfg: SsaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            history: VecDeque::with_capacity(cfg.history),
            residuals: VecDeque::with_capacity(cfg.history),
            recent: VecDeque::with_capacity(cfg.impute_len),
            scratch: Vec::with_capacity(cfg.history),
            cfg,
        })
    }

    pub fn config(&self) -> &SsaConfig {
        &self.cfg
    }

    /// True once the history ring is full and values are being tested.
    pub fn is_warm(&self) -> bool {
        self.history.len() == self.cfg.history
    }

    /// Filters one value, returning the cleaned value and whether the raw
    /// value was judged an outlier.
    pub fn filter_point(&mut self, x: f64) -> Result<(f64, bool)> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                index: 0,
                value: x,
            });
        }
        if !self.is_warm() {
            self.history.push_back(x);
            self.push_recent(x);
            return Ok((x, false));
        }

        self.scratch.clear();
        self.scratch.extend(self.history.iter().copied());
        let fit = ssa_fit_next(&self.scratch, x, self.cfg.embed_len, self.cfg.rank)?;
        let residual = x - fit;

        let flagged = self.residuals.len() >= MIN_RESIDUALS
            && residual.abs() > self.cfg.k * rolling_std(&self.residuals);
        let cleaned = if flagged && !self.recent.is_empty() {
            self.recent.iter().sum::<f64>() / self.recent.len() as f64
        } else {
            x
        };

        if self.residuals.len() == self.cfg.history {
            self.residuals.pop_front();
        }
        self.residuals.push_back(residual);
        // The raw value stays in the ring so that level shifts are absorbed.
        self.history.pop_front();
        self.history.push_back(x);
        self.push_recent(cleaned);
        Ok((cleaned, flagged && cleaned != x))
    }

    fn push_recent(&mut self, v: f64) {
        if self.recent.len() == self.cfg.impute_len {
            self.recent.pop_front();
        }
        self.recent.push_back(v);
    }
}

fn rolling_std(values: &VecDeque<f64>) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
