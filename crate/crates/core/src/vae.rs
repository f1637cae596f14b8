// SPDX-License-Identifier: MIT OR Apache-2.0

//! A small fully connected VAE trained by hand-written backpropagation.
//!
//! Encoder: `w -> 4 (ELU) -> (mu, log sigma²)` with latent size `z`.
//! Decoder: `z -> 4 (ELU) -> w` (linear output, read as the mean of a
//! unit-variance Gaussian). Loss per window is `KL(q(z|x) || N(0, I))` plus
//! `0.5 ‖x - x̂‖²`, averaged over the batch.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::config::Window;
use crate::error::{Error, Result};

pub const HIDDEN: usize = 4;

const RMS_RHO: f64 = 0.9;
const RMS_EPS: f64 = 1e-7;

/// Named parameter blocks inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    EncHidden,
    EncHiddenBias,
    EncMu,
    EncMuBias,
    EncLogVar,
    EncLogVarBias,
    DecHidden,
    DecHiddenBias,
    DecOut,
    DecOutBias,
}

const BLOCKS: [Block; 10] = [
    Block::EncHidden,
    Block::EncHiddenBias,
    Block::EncMu,
    Block::EncMuBias,
    Block::EncLogVar,
    Block::EncLogVarBias,
    Block::DecHidden,
    Block::DecHiddenBias,
    Block::DecOut,
    Block::DecOutBias,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Layout {
    w: usize,
    z: usize,
}

impl Layout {
    /// (rows, cols) of a block; biases are column vectors.
    fn shape(&self, b: Block) -> (usize, usize) {
        let (w, z, h) = (self.w, self.z, HIDDEN);
        match b {
            Block::EncHidden => (h, w),
            Block::EncHiddenBias => (h, 1),
            Block::EncMu | Block::EncLogVar => (z, h),
            Block::EncMuBias | Block::EncLogVarBias => (z, 1),
            Block::DecHidden => (h, z),
            Block::DecHiddenBias => (h, 1),
            Block::DecOut => (w, h),
            Block::DecOutBias => (w, 1),
        }
    }

    fn range(&self, b: Block) -> std::ops::Range<usize> {
        let mut start = 0;
        for other in BLOCKS {
            let (r, c) = self.shape(other);
            if other == b {
                return start..start + r * c;
            }
            start += r * c;
        }
        unreachable!()
    }

    fn total(&self) -> usize {
        BLOCKS.iter().map(|&b| {
            let (r, c) = self.shape(b);
            r * c
        }).sum()
    }
}

/// Encoder/decoder parameters plus a trained flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeModel {
    layout: Layout,
    params: Vec<f64>,
    trained: bool,
}

/// Per-epoch loss trace of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Forward {
    a1: [f64; HIDDEN],
    h: [f64; HIDDEN],
    mu: Vec<f64>,
    logvar: Vec<f64>,
    z: Vec<f64>,
    a2: [f64; HIDDEN],
    g: [f64; HIDDEN],
    xhat: Vec<f64>,
}

#[inline]
fn elu(a: f64) -> f64 {
    if a > 0.0 {
        a
    } else {
        a.exp() - 1.0
    }
}

#[inline]
fn elu_grad(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a.exp()
    }
}

/// `out[r] = bias[r] + Σ_c m[r, c] · x[c]` for a row-major `rows x cols` block.
fn affine(m: &[f64], bias: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * cols..(r + 1) * cols];
        *o = bias[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl VaeModel {
    /// Glorot-uniform weights and zero biases drawn from `rng`.
    pub fn new<R: Rng + ?Sized>(w: usize, z: usize, rng: &mut R) -> Self {
        let layout = Layout { w, z };
        let mut params = vec![0.0; layout.total()];
        for b in [
            Block::EncHidden,
            Block::EncMu,
            Block::EncLogVar,
            Block::DecHidden,
            Block::DecOut,
        ] {
            let (rows, cols) = layout.shape(b);
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for p in &mut params[layout.range(b)] {
                *p = dist.sample(rng);
            }
        }
        Self {
            layout,
            params,
            trained: false,
        }
    }

    pub fn window_len(&self) -> usize {
        self.layout.w
    }

    pub fn latent_dim(&self) -> usize {
        self.layout.z
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Marks externally supplied parameters as ready for scoring.
    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn block(&self, b: Block) -> &[f64] {
        &self.params[self.layout.range(b)]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut [f64] {
        let r = self.layout.range(b);
        &mut self.params[r]
    }

    pub fn block_shape(&self, b: Block) -> (usize, usize) {
        self.layout.shape(b)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.layout.w {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.layout.w,
            });
        }
        Ok(())
    }

    fn encode(&self, x: &[f64]) -> ([f64; HIDDEN], [f64; HIDDEN], Vec<f64>, Vec<f64>) {
        let mut a1 = [0.0; HIDDEN];
        affine(self.block(Block::EncHidden), self.block(Block::EncHiddenBias), x, &mut a1);
        let h = a1.map(elu);
        let mut mu = vec![0.0; self.layout.z];
        affine(self.block(Block::EncMu), self.block(Block::EncMuBias), &h, &mut mu);
        let mut logvar = vec![0.0; self.layout.z];
        affine(self.block(Block::EncLogVar), self.block(Block::EncLogVarBias), &h, &mut logvar);
        (a1, h, mu, logvar)
    }

    fn decode(&self, z: &[f64]) -> ([f64; HIDDEN], [f64; HIDDEN], Vec<f64>) {
        let mut a2 = [0.0; HIDDEN];
        affine(self.block(Block::DecHidden), self.block(Block::DecHiddenBias), z, &mut a2);
        let g = a2.map(elu);
        let mut xhat = vec![0.0; self.layout.w];
        affine(self.block(Block::DecOut), self.block(Block::DecOutBias), &g, &mut xhat);
        (a2, g, xhat)
    }

    fn forward(&self, x: &[f64], eps: &[f64]) -> Forward {
        let (a1, h, mu, logvar) = self.encode(x);
        let z: Vec<f64> = mu
            .iter()
            .zip(&logvar)
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        let (a2, g, xhat) = self.decode(&z);
        Forward {
            a1,
            h,
            mu,
            logvar,
            z,
            a2,
            g,
            xhat,
        }
    }

    /// Deterministic encoder mean `mu_z(x)`.
    pub fn encode_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        self.check_input(x)?;
        Ok(self.encode(x).2)
    }

    /// Mean squared reconstruction error through the encoder mean (no sampling).
    pub fn reconstruction_mse(&self, samples: &[Window]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            self.check_input(&s.values)?;
            let (_, _, mu, _) = self.encode(&s.values);
            let (_, _, xhat) = self.decode(&mu);
            total += s
                .values
                .iter()
                .zip(&xhat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / self.layout.w as f64;
        }
        Ok(total / samples.len() as f64)
    }

    /// Batch-mean loss for fixed reparameterisation noise. `eps` holds
    /// `batch.len() * z` standard-normal draws, row per sample.
    pub fn loss(&self, batch: &[Window], eps: &[f64]) -> Result<f64> {
        Ok(self.loss_and_grad(batch, eps)?.0)
    }

    /// Batch-mean loss and its gradient with respect to the flat parameter vector.
    pub fn loss_and_grad(&self, batch: &[Window], eps: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (w, z) = (self.layout.w, self.layout.z);
        if batch.is_empty() {
            return Err(Error::Empty);
        }
        if eps.len() != batch.len() * z {
            return Err(Error::LengthMismatch {
                left: eps.len(),
                right: batch.len() * z,
            });
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;

        let r_eh = self.layout.range(Block::EncHidden);
        let r_ehb = self.layout.range(Block::EncHiddenBias);
        let r_mu = self.layout.range(Block::EncMu);
        let r_mub = self.layout.range(Block::EncMuBias);
        let r_lv = self.layout.range(Block::EncLogVar);
        let r_lvb = self.layout.range(Block::EncLogVarBias);
        let r_dh = self.layout.range(Block::DecHidden);
        let r_dhb = self.layout.range(Block::DecHiddenBias);
        let r_do = self.layout.range(Block::DecOut);
        let r_dob = self.layout.range(Block::DecOutBias);

        for (s, sample) in batch.iter().enumerate() {
            let x = &sample.values;
            self.check_input(x)?;
            let e = &eps[s * z..(s + 1) * z];
            let f = self.forward(x, e);

            let recon: f64 = x.iter().zip(&f.xhat).map(|(a, b)| (a - b) * (a - b)).sum();
            let kl: f64 = f
                .mu
                .iter()
                .zip(&f.logvar)
                .map(|(m, lv)| -0.5 * (1.0 + lv - m * m - lv.exp()))
                .sum();
            loss += scale * (0.5 * recon + kl);

            // Decoder output layer.
            let dxhat: Vec<f64> = f.xhat.iter().zip(x).map(|(a, b)| scale * (a - b)).collect();
            let dout = &self.params[r_do.clone()];
            let mut dg = [0.0; HIDDEN];
            for i in 0..w {
                grad[r_dob.start + i] += dxhat[i];
                for j in 0..HIDDEN {
                    grad[r_do.start + i * HIDDEN + j] += dxhat[i] * f.g[j];
                    dg[j] += dout[i * HIDDEN + j] * dxhat[i];
                }
            }
            // Decoder hidden layer.
            let da2: [f64; HIDDEN] = std::array::from_fn(|j| dg[j] * elu_grad(f.a2[j]));
            let dec_h = &self.params[r_dh.clone()];
            let mut dz = vec![0.0; z];
            for j in 0..HIDDEN {
                grad[r_dhb.start + j] += da2[j];
                for k in 0..z {
                    grad[r_dh.start + j * z + k] += da2[j] * f.z[k];
                    dz[k] += dec_h[j * z + k] * da2[j];
                }
            }
            // Reparameterisation and KL.
            let dmu: Vec<f64> = (0..z).map(|k| dz[k] + scale * f.mu[k]).collect();
            let dlv: Vec<f64> = (0..z)
                .map(|k| {
                    dz[k] * e[k] * 0.5 * (0.5 * f.logvar[k]).exp()
                        + scale * 0.5 * (f.logvar[k].exp() - 1.0)
                })
                .collect();
            let enc_mu = &self.params[r_mu.clone()];
            let enc_lv = &self.params[r_lv.clone()];
            let mut dh = [0.0; HIDDEN];
            for k in 0..z {
                grad[r_mub.start + k] += dmu[k];
                grad[r_lvb.start + k] += dlv[k];
                for j in 0..HIDDEN {
                    grad[r_mu.start + k * HIDDEN + j] += dmu[k] * f.h[j];
                    grad[r_lv.start + k * HIDDEN + j] += dlv[k] * f.h[j];
                    dh[j] += enc_mu[k * HIDDEN + j] * dmu[k] + enc_lv[k * HIDDEN + j] * dlv[k];
                }
            }
            // Encoder hidden layer.
            for j in 0..HIDDEN {
                let da1 = dh[j] * elu_grad(f.a1[j]);
                grad[r_ehb.start + j] += da1;
                for i in 0..w {
                    grad[r_eh.start + j * w + i] += da1 * x[i];
                }
            }
        }
        Ok((loss, grad))
    }
}

/// Full-batch RMSprop training with fresh reparameterisation noise each epoch.
/// Marks the model trained on success.
pub fn vae_train<R: Rng + ?Sized>(
    model: &mut VaeModel,
    samples: &[Window],
    epochs: usize,
    lr: f64,
    rng: &mut R,
) -> Result<TrainReport> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let z = model.layout.z;
    let mut mean_sq = vec![0.0; model.params.len()];
    let mut eps = vec![0.0; samples.len() * z];
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(rng);
        }
        let (loss, grad) = model.loss_and_grad(samples, &eps)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        for ((p, v), g) in model.params.iter_mut().zip(mean_sq.iter_mut()).zip(&grad) {
            *v = RMS_RHO * *v + (1.0 - RMS_RHO) * g * g;
            *p -= lr * g / (v.sqrt() + RMS_EPS);
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        losses.push(loss);
    }
    model.trained = true;
    Ok(TrainReport { losses })
}
