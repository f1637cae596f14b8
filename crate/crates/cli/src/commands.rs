// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use mocpd::evaluate::{evaluate_corpus, EvalReport};
use mocpd::simulate::{gen_fl, gen_gaussian_mixture, gen_jumping_mean, FlParams, LeakScenario};
use mocpd::{
    run_detector, seeded_rng, Detection, DetectorConfig, Mocpd, Newma, NewmaConfig, OnlineDetector,
    SeriesPoint, StreamOutput,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{Baseline, Command, DetectArgs, EvaluateArgs, SimKind, SimulateArgs};
use crate::error::CliError;
use crate::io;

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a).map(|_| ()),
        Command::Detect(a) => detect(a).map(|_| ()),
        Command::Evaluate(a) => evaluate(a).map(|_| ()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateManifest {
    pub command: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub samples: usize,
    pub change_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fl_params: Option<FlParams>,
    /// Leak actually injected (fl only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leak: Option<LeakSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakSummary {
    pub avg_rate: f64,
    pub drawn_rate: f64,
    pub start_idx: usize,
    pub stop_idx: usize,
}

impl From<&LeakScenario> for LeakSummary {
    fn from(s: &LeakScenario) -> Self {
        Self {
            avg_rate: s.avg_rate,
            drawn_rate: s.drawn_rate,
            start_idx: s.start_idx,
            stop_idx: s.stop_idx,
        }
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<SimulateManifest, CliError> {
    let mut rng = seeded_rng(a.seed);
    let mut manifest = SimulateManifest {
        command: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: String::new(),
        seed: a.seed,
        samples: 0,
        change_points: 0,
        segments: None,
        segment_len: None,
        fl_params: None,
        leak: None,
    };
    let series = match a.kind {
        SimKind::Fl => {
            let mut p = FlParams::default();
            if let Some(v) = a.length {
                p.length = v;
            }
            if let Some(v) = a.sigma {
                p.sigma = v;
            }
            if let Some(v) = a.avg_rate {
                p.avg_rate = v;
            }
            if let Some(v) = a.trend_amplitude {
                p.trend_amplitude = v;
            }
            let (series, scenario) = gen_fl(&p, &mut rng)?;
            manifest.kind = "fl".into();
            manifest.leak = Some((&scenario).into());
            manifest.fl_params = Some(p);
            series
        }
        SimKind::Jm | SimKind::Gm => {
            if a.segments == 0 || a.segment_len == 0 {
                return Err(CliError::InvalidParams(
                    "segments and segment length must be positive".into(),
                ));
            }
            manifest.segments = Some(a.segments);
            manifest.segment_len = Some(a.segment_len);
            if a.kind == SimKind::Jm {
                manifest.kind = "jm".into();
                gen_jumping_mean(a.segments, a.segment_len, &mut rng)
            } else {
                manifest.kind = "gm".into();
                gen_gaussian_mixture(a.segments, a.segment_len, &mut rng)
            }
        }
    };
    manifest.samples = series.values.len();
    manifest.change_points = series.cps.len();
    io::write_series(&a.out.join("series.csv"), &series.values)?;
    io::write_truth(&a.out.join("truth.csv"), &series.cps)?;
    io::write_json(&a.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Per-decision wall time statistics, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub decisions: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
}

impl TimingSummary {
    pub fn from_durations(times: &[Duration]) -> Self {
        if times.is_empty() {
            return Self::default();
        }
        let mut ms: Vec<f64> = times.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let rank = |q: f64| ms[((ms.len() - 1) as f64 * q).round() as usize];
        Self {
            decisions: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            median_ms: rank(0.5),
            p99_ms: rank(0.99),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub name: String,
    pub input: PathBuf,
    pub samples: usize,
    pub detections: usize,
    pub timing: TimingSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectManifest {
    pub command: String,
    pub version: String,
    pub detector: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<DetectorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newma: Option<NewmaConfig>,
    pub series: Vec<SeriesSummary>,
    pub timing: TimingSummary,
}

/// Defaults, overlaid by the JSON config file, overlaid by explicit flags.
pub fn resolve_config(a: &DetectArgs) -> Result<DetectorConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::MissingFile(path.clone()));
            }
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => DetectorConfig::default(),
    };
    macro_rules! overlay {
        ($($field:ident),*) => {$(
            if let Some(v) = a.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    overlay!(window, memory, min_memory, buffer, stride, alpha, quantile, measure, scheme, seed, tolerance);
    if a.mmd_bandwidth.is_some() {
        cfg.mmd_bandwidth = a.mmd_bandwidth;
    }
    if a.ssa_off {
        cfg.ssa = false;
    }
    cfg.validate().map_err(mocpd::Error::from)?;
    Ok(cfg)
}

/// Series files to process, as `(name, path)` sorted by name. A file, or a
/// directory holding `series.csv` (as written by `simulate`), is a single
/// series; any other directory may hold `*.csv` files and/or subdirectories
/// containing `series.csv`.
pub fn collect_inputs(input: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    if !input.exists() {
        return Err(CliError::MissingFile(input.to_path_buf()));
    }
    if input.join("series.csv").is_file() {
        return Ok(vec![("series".into(), input.join("series.csv"))]);
    }
    if input.is_file() {
        let name = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        return Ok(vec![(name, input.to_path_buf())]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(input).map_err(|e| CliError::io(input, e))? {
        let path = entry.map_err(|e| CliError::io(input, e))?.path();
        if path.is_dir() {
            let series = path.join("series.csv");
            if series.is_file() {
                out.push((path.file_name().unwrap().to_string_lossy().into_owned(), series));
            }
        } else if path.extension().is_some_and(|e| e == "csv") {
            out.push((path.file_stem().unwrap().to_string_lossy().into_owned(), path));
        }
    }
    if out.is_empty() {
        return Err(CliError::InvalidParams(format!(
            "no series found in {}",
            input.display()
        )));
    }
    out.sort();
    Ok(out)
}

fn run_one(
    points: &[SeriesPoint],
    cfg: &DetectorConfig,
    baseline: Option<Baseline>,
) -> Result<StreamOutput, CliError> {
    // Detectors count from 0; shift and restore the file's own indices.
    let offset = points.first().map_or(0, |p| p.index);
    let shifted: Vec<SeriesPoint> = points
        .iter()
        .map(|p| SeriesPoint::new(p.index - offset, p.value))
        .collect();
    let mut det: Box<dyn OnlineDetector> = match baseline {
        Some(Baseline::Newma) => Box::new(Newma::new(NewmaConfig::default())?),
        None => Box::new(Mocpd::new(cfg.clone())?),
    };
    let mut out = run_detector(det.as_mut(), &shifted)?;
    for d in &mut out.detections {
        d.index += offset;
    }
    for t in &mut out.trace {
        t.index += offset;
    }
    Ok(out)
}

pub fn detect(a: &DetectArgs) -> Result<DetectManifest, CliError> {
    let cfg = resolve_config(a)?;
    let inputs = collect_inputs(&a.input)?;
    let single = a.input.is_file() || a.input.join("series.csv").is_file();

    let results: Vec<Result<(SeriesSummary, Vec<Duration>), CliError>> = inputs
        .par_iter()
        .map(|(name, path)| {
            let points = io::read_series(path)?;
            let out = run_one(&points, &cfg, a.baseline)?;
            let dir = if single { a.out.clone() } else { a.out.join(name) };
            io::write_detections(&dir.join("detections.csv"), &out.detections)?;
            io::write_trace(&dir.join("trace.csv"), &out.trace)?;
            Ok((
                SeriesSummary {
                    name: name.clone(),
                    input: path.clone(),
                    samples: points.len(),
                    detections: out.detections.len(),
                    timing: TimingSummary::from_durations(&out.decision_times),
                },
                out.decision_times,
            ))
        })
        .collect();

    let mut series = Vec::with_capacity(results.len());
    let mut all_times = Vec::new();
    for r in results {
        let (summary, times) = r?;
        series.push(summary);
        all_times.extend(times);
    }
    let manifest = DetectManifest {
        command: "detect".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        detector: match a.baseline {
            Some(Baseline::Newma) => "newma".into(),
            None => format!("mocpd-{}", cfg.measure),
        },
        config: a.baseline.is_none().then(|| cfg.clone()),
        newma: a.baseline.map(|_| NewmaConfig::default()),
        series,
        timing: TimingSummary::from_durations(&all_times),
    };
    io::write_json(&a.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Pairs detection and truth files. Directories are matched by subfolder
/// name: `<detections>/<name>/detections.csv` with `<truth>/<name>/truth.csv`.
fn collect_pairs(dets: &Path, truth: &Path) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    for p in [dets, truth] {
        if !p.exists() {
            return Err(CliError::MissingFile(p.to_path_buf()));
        }
    }
    match (dets.is_file(), truth.is_file()) {
        (true, true) => Ok(vec![(dets.to_path_buf(), truth.to_path_buf())]),
        (false, false) => {
            let mut names: Vec<String> = fs::read_dir(dets)
                .map_err(|e| CliError::io(dets, e))?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().join("detections.csv").is_file())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            if names.is_empty() {
                return Err(CliError::InvalidParams(format!(
                    "no detections found in {}",
                    dets.display()
                )));
            }
            Ok(names
                .iter()
                .map(|n| (dets.join(n).join("detections.csv"), truth.join(n).join("truth.csv")))
                .collect())
        }
        _ => Err(CliError::InvalidParams(
            "detections and truth must both be files or both be directories".into(),
        )),
    }
}

pub fn evaluate(a: &EvaluateArgs) -> Result<EvalReport, CliError> {
    if !(a.beta.is_finite() && a.beta > 0.0) {
        return Err(CliError::InvalidParams("beta must be positive".into()));
    }
    let mut sequences = Vec::new();
    for (d, t) in collect_pairs(&a.detections, &a.truth)? {
        sequences.push((io::read_truth(&t)?, io::read_detection_indices(&d)?));
    }
    let report = evaluate_corpus(&sequences, a.tolerance, a.beta);
    io::write_json(&a.out, &report)?;
    Ok(report)
}

/// Detection list as written to `detections.csv`, for callers that want the
/// in-memory result without touching disk.
pub fn detect_points(
    points: &[SeriesPoint],
    cfg: &DetectorConfig,
    newma: bool,
) -> Result<Vec<Detection>, CliError> {
    Ok(run_one(points, cfg, newma.then_some(Baseline::Newma))?.detections)
}
