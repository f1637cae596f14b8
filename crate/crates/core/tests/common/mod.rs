// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference implementations used to cross-check the library.
//! Kept deliberately naive: plain loops, no shared code with `mocpd`.

#![allow(dead_code)]

use mocpd::config::Window;
use mocpd::vae::{Block, VaeModel};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Biased MMD² by explicit double loops over the three kernel sums.
pub fn brute_mmd(w: &[f64], m: &[f64], sigma: f64) -> f64 {
    let k = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * sigma * sigma)).exp();
    let mut kww = 0.0;
    for &a in w {
        for &b in w {
            kww += k(a, b);
        }
    }
    let mut kmm = 0.0;
    for &a in m {
        for &b in m {
            kmm += k(a, b);
        }
    }
    let mut kwm = 0.0;
    for &a in w {
        for &b in m {
            kwm += k(a, b);
        }
    }
    let (nw, nm) = (w.len() as f64, m.len() as f64);
    kww / (nw * nw) + kmm / (nm * nm) - 2.0 * kwm / (nw * nm)
}

/// One-sided Jacobi SVD of a row-major `rows x cols` matrix.
/// Returns `(u_columns, singular_values, v_columns)`, sorted descending.
pub fn jacobi_svd(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let rows = a.len();
    let cols = a[0].len();
    // Work on columns of A; accumulate V.
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (u[p][i], u[q][i]);
                    u[p][i] = c * x - s * y;
                    u[q][i] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<(f64, Vec<f64>, Vec<f64>)> = u
        .into_iter()
        .zip(v)
        .map(|(col, vcol)| {
            let s = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ucol = if s > 0.0 { col.iter().map(|x| x / s).collect() } else { col };
            (s, ucol, vcol)
        })
        .collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let s = sv.iter().map(|t| t.0).collect();
    let uc = sv.iter().map(|t| t.1.clone()).collect();
    let vc = sv.into_iter().map(|t| t.2).collect();
    (uc, s, vc)
}

/// Rank-`rank` SSA reconstruction via [`jacobi_svd`] and diagonal averaging.
pub fn ssa_oracle(x: &[f64], l: usize, rank: usize) -> Vec<f64> {
    let n = x.len();
    let k = n - l + 1;
    let traj: Vec<Vec<f64>> = (0..l).map(|i| (0..k).map(|j| x[i + j]).collect()).collect();
    let (u, s, v) = jacobi_svd(&traj);
    let mut approx = vec![vec![0.0; k]; l];
    for c in 0..rank.min(s.len()) {
        for i in 0..l {
            for j in 0..k {
                approx[i][j] += s[c] * u[c][i] * v[c][j];
            }
        }
    }
    let mut sum = vec![0.0; n];
    let mut count = vec![0.0; n];
    for i in 0..l {
        for j in 0..k {
            sum[i + j] += approx[i][j];
            count[i + j] += 1.0;
        }
    }
    sum.iter().zip(&count).map(|(s, c)| s / c).collect()
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// `W x + b` for a row-major `W`.
fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| bias + (0..cols).map(|c| w[r * cols + c] * x[c]).sum::<f64>())
        .collect()
}

/// Encoder mean through the raw parameter blocks.
pub fn vae_mu_oracle(model: &VaeModel, x: &[f64]) -> Vec<f64> {
    let h: Vec<f64> = dense(model.block(Block::EncHidden), model.block(Block::EncHiddenBias), x)
        .into_iter()
        .map(elu)
        .collect();
    dense(model.block(Block::EncMu), model.block(Block::EncMuBias), &h)
}

/// Largest relative error between the analytic gradient and central finite
/// differences of `model.loss` at step `h`. The denominator is floored at
/// `floor` so parameters with vanishing gradient do not dominate.
pub fn fd_max_rel_error(model: &VaeModel, batch: &[Window], eps: &[f64], h: f64, floor: f64) -> f64 {
    let (_, grad) = model.loss_and_grad(batch, eps).unwrap();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for i in 0..grad.len() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = probe.loss(batch, eps).unwrap();
        probe.params_mut()[i] = orig - h;
        let down = probe.loss(batch, eps).unwrap();
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}

/// Pearson chi-square goodness-of-fit p-value against equal expected counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Linear-interpolation quantile at position `(n-1)p` of a sorted copy.
pub fn sorted_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (v.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Two-sided one-sample Kolmogorov-Smirnov p-value against `cdf`
/// (asymptotic Kolmogorov distribution).
pub fn ks_p_value(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        p += 2.0 * (-1.0f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Ordinary least squares `y ≈ X b` through the normal equations
/// (Gaussian elimination with partial pivoting).
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}
