// SPDX-License-Identifier: MIT OR Apache-2.0

//! Memory-based online change point detection.
//!
//! A detector keeps a bounded memory of representative windows for the
//! current regime, an adaptive quantile threshold over their dissimilarity
//! to the memory centroid, and a buffer of recent in-regime windows that is
//! periodically merged back into memory. A window whose dissimilarity to the
//! centroid exceeds the threshold is reported as a change point, after which
//! the detector collects a fresh memory for the new regime.
//!
//! Modules:
//! - [`config`]: shared domain types and [`DetectorConfig`].
//! - [`preprocess`]: online SSA outlier filter.
//! - [`dissimilarity`] and [`vae`]: the window-vs-centroid measures.
//! - [`memory`]: centroid, threshold and the three resampling schemes.
//! - [`detector`]: the streaming state machine and a NEWMA baseline.
//! - [`simulate`]: leak injection and synthetic benchmark generators.
//! - [`evaluate`]: tolerance-window matching and precision/recall metrics.

#![forbid(unsafe_code)]

pub mod config;
pub mod detector;
pub mod dissimilarity;
pub mod error;
pub mod evaluate;
pub mod memory;
pub mod newma;
pub mod preprocess;
pub mod simulate;
pub mod vae;

pub use config::{
    validate_config, Detection, DetectorConfig, MeasureKind, Scheme, SeriesPoint, Window,
};
pub use detector::{
    points_from_values, run_detector, run_stream, Mocpd, OnlineDetector, Phase, StepReport,
    StreamOutput, TracePoint,
};
pub use dissimilarity::Measure;
pub use error::{ConfigError, Error, Result};
pub use memory::Memory;
pub use newma::{Newma, NewmaConfig};
pub use preprocess::{SsaConfig, SsaFilter};
pub use vae::VaeModel;

/// The generator every stochastic component draws from.
pub type DetRng = rand_chacha::ChaCha8Rng;

/// Builds the crate-wide deterministic generator from a seed.
pub fn seeded_rng(seed: u64) -> DetRng {
    use rand::SeedableRng;
    DetRng::seed_from_u64(seed)
}
