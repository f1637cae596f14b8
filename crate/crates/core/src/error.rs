// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One variant per violated [`crate::DetectorConfig`] invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("w too small: window must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("n exceeds m: min_memory {n} > memory {m}")]
    MinMemoryExceedsMemory { n: usize, m: usize },
    #[error("n too small: min_memory must be at least 2, got {0}")]
    MinMemoryTooSmall(usize),
    #[error("b too small: buffer must be at least 1")]
    BufferZero,
    #[error("r too small: stride must be at least 1")]
    StrideZero,
    #[error("alpha must be finite and > 0, got {0}")]
    AlphaNotPositive(f64),
    #[error("quantile must lie in (0, 1), got {0}")]
    QuantileOutOfRange(f64),
    #[error("mmd_bandwidth must be finite and > 0, got {0}")]
    BandwidthNotPositive(f64),
    #[error("vae settings invalid: {0}")]
    Vae(String),
    #[error("ssa settings invalid: {0}")]
    Ssa(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: u64, value: f64 },
    #[error("out-of-order point: expected index {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("empty input")]
    Empty,
    #[error("VAE model has not been trained")]
    Untrained,
    #[error("VAE training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
