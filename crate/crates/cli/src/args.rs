// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mocpd::{MeasureKind, Scheme};

#[derive(Debug, Parser)]
#[command(name = "mocpd", version, about = "Memory-based online change point detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic series.
    Simulate(SimulateArgs),
    /// Run a detector over a series file or a directory of series files.
    Detect(DetectArgs),
    /// Score detections against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    /// Fuel-leak variance stream with one injected leak.
    Fl,
    /// AR(2) jumping mean.
    Jm,
    /// Alternating Gaussian mixtures.
    Gm,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub kind: SimKind,
    /// Output directory for series.csv, truth.csv and manifest.json.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Segments (jm/gm).
    #[arg(long, default_value_t = 49)]
    pub segments: usize,
    /// Samples per segment (jm/gm).
    #[arg(long, default_value_t = 500)]
    pub segment_len: usize,
    /// Series length (fl).
    #[arg(long)]
    pub length: Option<usize>,
    /// Base noise standard deviation (fl).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Average leak rate in gallons per hour (fl).
    #[arg(long)]
    pub avg_rate: Option<f64>,
    /// Amplitude of the periodic trend (fl).
    #[arg(long)]
    pub trend_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Newma,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// A series CSV (`index,value`) or a directory of them.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// JSON detector configuration; flags given explicitly override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub memory: Option<usize>,
    #[arg(long)]
    pub min_memory: Option<usize>,
    #[arg(long)]
    pub buffer: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub quantile: Option<f64>,
    #[arg(long)]
    pub measure: Option<MeasureKind>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<usize>,
    #[arg(long)]
    pub mmd_bandwidth: Option<f64>,
    /// Disable the outlier filter.
    #[arg(long)]
    pub ssa_off: bool,
    /// Run a baseline instead of the memory-based detector.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// detections.csv, or a directory of per-series detection folders.
    #[arg(long, short)]
    pub detections: PathBuf,
    /// truth.csv, or a directory with one `<name>.truth.csv` per series.
    #[arg(long, short)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 480)]
    pub tolerance: usize,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Path of the report JSON.
    #[arg(long, short)]
    pub out: PathBuf,
}
