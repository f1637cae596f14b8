// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared domain types and the detector configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// One timestamped scalar observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub index: u64,
    pub value: f64,
}

impl SeriesPoint {
    pub fn new(index: u64, value: f64) -> Self {
        Self { index, value }
    }
}

/// A run of `w` consecutive values and the stream index of its first entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: u64,
    pub values: Vec<f64>,
}

impl Window {
    pub fn new(start: u64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// A reported change point. `index` is the stream position at which the
/// decision was made (the last entry of the triggering window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub index: u64,
    pub score: f64,
    pub threshold_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Mean,
    Mmd,
    Vae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Random,
    Reservoir,
    Prototype,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Mean => "mean",
            MeasureKind::Mmd => "mmd",
            MeasureKind::Vae => "vae",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(MeasureKind::Mean),
            "mmd" => Ok(MeasureKind::Mmd),
            "vae" => Ok(MeasureKind::Vae),
            other => Err(format!("unknown measure `{other}` (expected mean|mmd|vae)")),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Random => "random",
            Scheme::Reservoir => "reservoir",
            Scheme::Prototype => "prototype",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Scheme::Random),
            "reservoir" => Ok(Scheme::Reservoir),
            "prototype" => Ok(Scheme::Prototype),
            other => Err(format!(
                "unknown scheme `{other}` (expected random|reservoir|prototype)"
            )),
        }
    }
}

/// Detector hyperparameters. Serialises to a flat JSON object whose keys
/// match the CLI flag names (with `-` replaced by `_`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Window size `w`.
    pub window: usize,
    /// Maximum number of windows held in memory (`m`).
    pub memory: usize,
    /// Windows collected before detection starts (`n`).
    pub min_memory: usize,
    /// Buffer size in windows (`b`); an update runs once the buffer exceeds it.
    pub buffer: usize,
    /// Stride `r` between scored windows.
    pub stride: usize,
    /// Threshold scale `alpha`.
    pub alpha: f64,
    /// Quantile probability `p`.
    pub quantile: f64,
    pub measure: MeasureKind,
    pub scheme: Scheme,
    pub seed: u64,
    /// Matching tolerance in samples, used by evaluation.
    pub tolerance: usize,
    /// Fixed RBF bandwidth; `None` selects the median heuristic.
    pub mmd_bandwidth: Option<f64>,
    /// Run the SSA outlier filter in front of the detector.
    pub ssa: bool,
    pub vae_latent: usize,
    pub vae_epochs: usize,
    pub vae_lr: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 100,
            memory: 75,
            min_memory: 50,
            buffer: 15,
            stride: 10,
            alpha: 4.0,
            quantile: 0.975,
            measure: MeasureKind::Mmd,
            scheme: Scheme::Random,
            seed: 0,
            tolerance: 480,
            mmd_bandwidth: None,
            ssa: true,
            vae_latent: 2,
            vae_epochs: 100,
            vae_lr: 0.01,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_config(self)
    }
}

/// Checks every configuration invariant, reporting the first violation.
pub fn validate_config(cfg: &DetectorConfig) -> Result<(), ConfigError> {
    if cfg.window < 2 {
        return Err(ConfigError::WindowTooSmall(cfg.window));
    }
    if cfg.min_memory > cfg.memory {
        return Err(ConfigError::MinMemoryExceedsMemory {
            n: cfg.min_memory,
            m: cfg.memory,
        });
    }
    // The threshold quantile needs at least two scores.
    if cfg.min_memory < 2 {
        return Err(ConfigError::MinMemoryTooSmall(cfg.min_memory));
    }
    if cfg.buffer == 0 {
        return Err(ConfigError::BufferZero);
    }
    if cfg.stride == 0 {
        return Err(ConfigError::StrideZero);
    }
    if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) {
        return Err(ConfigError::AlphaNotPositive(cfg.alpha));
    }
    if !(cfg.quantile > 0.0 && cfg.quantile < 1.0) {
        return Err(ConfigError::QuantileOutOfRange(cfg.quantile));
    }
    if let Some(bw) = cfg.mmd_bandwidth {
        if !(bw.is_finite() && bw > 0.0) {
            return Err(ConfigError::BandwidthNotPositive(bw));
        }
    }
    if cfg.vae_latent == 0 {
        return Err(ConfigError::Vae("vae_latent must be at least 1".into()));
    }
    if cfg.vae_epochs == 0 {
        return Err(ConfigError::Vae("vae_epochs must be at least 1".into()));
    }
    if !(cfg.vae_lr.is_finite() && cfg.vae_lr > 0.0) {
        return Err(ConfigError::Vae(format!(
            "vae_lr must be finite and > 0, got {}",
            cfg.vae_lr
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate() {
        let cfg = DetectorConfig::default();
        assert_eq!(cfg.stride, 10);
        assert_eq!(cfg.quantile, 0.975);
        assert_eq!(cfg.alpha, 4.0);
        assert_eq!(cfg.memory, 75);
        assert_eq!(cfg.scheme, Scheme::Random);
        assert_eq!(cfg.tolerance, 10 * 48);
        assert!(validate_config(&cfg).is_ok());
    }

    #[test]
    fn n_above_m_is_rejected() {
        let cfg = DetectorConfig {
            min_memory: 80,
            memory: 75,
            ..Default::default()
        };
        let err = validate_config(&cfg).unwrap_err();
        assert_eq!(err, ConfigError::MinMemoryExceedsMemory { n: 80, m: 75 });
        assert!(err.to_string().contains("n exceeds m"));
    }

    #[test]
    fn window_of_one_is_rejected() {
        let cfg = DetectorConfig {
            window: 1,
            ..Default::default()
        };
        let err = validate_config(&cfg).unwrap_err();
        assert!(err.to_string().contains("w too small"));
    }

    #[test]
    fn each_field_has_its_own_error() {
        let base = DetectorConfig::default();
        let cases: Vec<(DetectorConfig, &str)> = vec![
            (DetectorConfig { stride: 0, ..base.clone() }, "stride"),
            (DetectorConfig { buffer: 0, ..base.clone() }, "buffer"),
            (DetectorConfig { alpha: 0.0, ..base.clone() }, "alpha"),
            (DetectorConfig { alpha: f64::NAN, ..base.clone() }, "alpha"),
            (DetectorConfig { quantile: 1.0, ..base.clone() }, "quantile"),
            (DetectorConfig { quantile: 0.0, ..base.clone() }, "quantile"),
            (DetectorConfig { min_memory: 1, ..base.clone() }, "min_memory"),
            (
                DetectorConfig { mmd_bandwidth: Some(-1.0), ..base.clone() },
                "mmd_bandwidth",
            ),
            (DetectorConfig { vae_latent: 0, ..base.clone() }, "vae_latent"),
        ];
        for (cfg, field) in cases {
            let msg = validate_config(&cfg).unwrap_err().to_string();
            assert!(msg.contains(field), "{msg} should name {field}");
        }
    }

    #[test]
    fn parses_flat_json_with_defaults_for_missing_keys() {
        let cfg: DetectorConfig =
            serde_json::from_str(r#"{"window": 25, "measure": "mean", "scheme": "prototype"}"#)
                .unwrap();
        assert_eq!(cfg.window, 25);
        assert_eq!(cfg.measure, MeasureKind::Mean);
        assert_eq!(cfg.scheme, Scheme::Prototype);
        assert_eq!(cfg.memory, 75);
        assert!(serde_json::from_str::<DetectorConfig>(r#"{"windw": 3}"#).is_err());
    }

    #[test]
    fn enum_names_round_trip_through_strings() {
        for kind in [MeasureKind::Mean, MeasureKind::Mmd, MeasureKind::Vae] {
            assert_eq!(kind.to_string().parse::<MeasureKind>().unwrap(), kind);
        }
        for scheme in [Scheme::Random, Scheme::Reservoir, Scheme::Prototype] {
            assert_eq!(scheme.to_string().parse::<Scheme>().unwrap(), scheme);
        }
        assert!("median".parse::<MeasureKind>().is_err());
    }

    fn arb_config() -> impl Strategy<Value = DetectorConfig> {
        (
            2usize..500,
            2usize..200,
            1usize..50,
            1usize..50,
            0.01f64..100.0,
            0.001f64..0.999,
            prop_oneof![Just(MeasureKind::Mean), Just(MeasureKind::Mmd), Just(MeasureKind::Vae)],
            prop_oneof![Just(Scheme::Random), Just(Scheme::Reservoir), Just(Scheme::Prototype)],
            any::<u64>(),
            proptest::option::of(1e-6f64..1e3),
            any::<bool>(),
        )
            .prop_flat_map(|(w, m, b, r, alpha, p, measure, scheme, seed, bw, ssa)| {
                (2usize..=m).prop_map(move |n| DetectorConfig {
                    window: w,
                    memory: m,
                    min_memory: n,
                    buffer: b,
                    stride: r,
                    alpha,
                    quantile: p,
                    measure,
                    scheme,
                    seed,
                    tolerance: 480,
                    mmd_bandwidth: bw,
                    ssa,
                    ..Default::default()
                })
            })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_identity(cfg in arb_config()) {
            prop_assert!(validate_config(&cfg).is_ok());
            let text = serde_json::to_string(&cfg).unwrap();
            let back: DetectorConfig = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
