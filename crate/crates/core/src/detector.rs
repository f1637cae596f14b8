// SPDX-License-Identifier: MIT OR Apache-2.0

//! The streaming detector state machine.
//!
//! Every raw point passes through the optional SSA filter into a ring of the
//! last `w` cleaned values. Whenever the ring is full and its first entry
//! sits on the stride grid (`start % r == 0`) the ring becomes a window:
//!
//! - while initialising or collecting, the window joins the memory; at `n`
//!   windows the centroid and threshold are computed (and the VAE trained)
//!   and detection starts;
//! - while detecting, the window is scored against the centroid. A score above
//!   the threshold is a change point: memory and buffer are emptied and a new
//!   collection begins. Otherwise the window is buffered, and once the buffer
//!   holds more than `b` windows an update phase folds it into memory.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{validate_config, Detection, DetectorConfig, MeasureKind, SeriesPoint, Window};
use crate::dissimilarity::{median_bandwidth, Measure};
use crate::error::{Error, Result};
use crate::memory::{compute_threshold, run_update_phase, Memory, UpdateOutcome};
use crate::preprocess::{SsaConfig, SsaFilter};
use crate::vae::{vae_train, VaeModel};
use crate::{seeded_rng, DetRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Initialising,
    Detecting,
    Collecting { target_remaining: usize },
}

/// One scored window: decision index, score and the threshold it was held to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub index: u64,
    pub score: f64,
    pub threshold: f64,
}

/// Everything one call to [`Mocpd::step`] did.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub cleaned: f64,
    pub outlier: bool,
    pub scored: Option<TracePoint>,
    pub detection: Option<Detection>,
    pub update: Option<UpdateOutcome>,
    /// Wall time of the score-and-compare step, when one ran.
    pub decision_time: Option<Duration>,
}

/// A step-in/event-out detector over a univariate stream.
pub trait OnlineDetector {
    fn observe(&mut self, point: SeriesPoint) -> Result<StepReport>;
}

#[derive(Debug, Clone)]
pub struct Mocpd {
    cfg: DetectorConfig,
    phase: Phase,
    memory: Memory,
    buffer: Vec<Window>,
    cursor: u64,
    pending: VecDeque<f64>,
    rng: DetRng,
    measure: Measure,
    filter: Option<SsaFilter>,
    detections: Vec<Detection>,
    updates: usize,
}

impl Mocpd {
    /// A detector with the default SSA filter (when `cfg.ssa` is set).
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        Self::with_ssa(cfg, SsaConfig::default())
    }

    pub fn with_ssa(cfg: DetectorConfig, ssa: SsaConfig) -> Result<Self> {
        validate_config(&cfg)?;
        let filter = if cfg.ssa {
            Some(SsaFilter::new(ssa)?)
        } else {
            None
        };
        Ok(Self {
            phase: Phase::Initialising,
            memory: Memory::default(),
            buffer: Vec::with_capacity(cfg.buffer + 1),
            cursor: 0,
            pending: VecDeque::with_capacity(cfg.window),
            rng: seeded_rng(cfg.seed),
            measure: Measure::Mean,
            filter,
            detections: Vec::new(),
            updates: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn buffer(&self) -> &[Window] {
        &self.buffer
    }

    /// The measure as currently configured (bandwidth, trained VAE).
    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Next expected stream index.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    /// Number of update phases run so far.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    pub fn step(&mut self, point: SeriesPoint) -> Result<StepReport> {
        if point.index != self.cursor {
            return Err(Error::OutOfOrder {
                expected: self.cursor,
                got: point.index,
            });
        }
        if !point.value.is_finite() {
            return Err(Error::NonFinite {
                index: point.index,
                value: point.value,
            });
        }
        let (cleaned, outlier) = match self.filter.as_mut() {
            Some(f) => f.filter_point(point.value).map_err(|e| match e {
                Error::NonFinite { value, .. } => Error::NonFinite {
                    index: point.index,
                    value,
                },
                other => other,
            })?,
            None => (point.value, false),
        };
        self.cursor += 1;

        let w = self.cfg.window;
        if self.pending.len() == w {
            self.pending.pop_front();
        }
        self.pending.push_back(cleaned);

        let mut report = StepReport {
            cleaned,
            outlier,
            ..Default::default()
        };
        if self.pending.len() < w {
            return Ok(report);
        }
        let start = point.index + 1 - w as u64;
        if start % self.cfg.stride as u64 != 0 {
            return Ok(report);
        }
        let window = Window::new(start, self.pending.iter().copied().collect());

        match self.phase {
            Phase::Initialising | Phase::Collecting { .. } => self.collect(window)?,
            Phase::Detecting => self.detect(point.index, window, &mut report)?,
        }
        Ok(report)
    }

    fn collect(&mut self, window: Window) -> Result<()> {
        self.memory.samples.push(window);
        self.memory.seen_count += 1;
        let have = self.memory.len();
        let n = self.cfg.min_memory;
        if have < n {
            if let Phase::Collecting { .. } = self.phase {
                self.phase = Phase::Collecting {
                    target_remaining: n - have,
                };
            }
            return Ok(());
        }
        self.install_distribution()?;
        self.phase = Phase::Detecting;
        Ok(())
    }

    /// Centroid, measure and threshold for a freshly collected memory.
    fn install_distribution(&mut self) -> Result<()> {
        self.memory.refresh_centroid()?;
        self.measure = match self.cfg.measure {
            MeasureKind::Mean => Measure::Mean,
            MeasureKind::Mmd => Measure::Mmd {
                bandwidth: match self.cfg.mmd_bandwidth {
                    Some(bw) => bw,
                    None => median_bandwidth(&self.memory.samples, &mut self.rng),
                },
            },
            MeasureKind::Vae => {
                // Retrained from a fresh initialisation for every regime.
                let mut model = VaeModel::new(self.cfg.window, self.cfg.vae_latent, &mut self.rng);
                vae_train(
                    &mut model,
                    &self.memory.samples,
                    self.cfg.vae_epochs,
                    self.cfg.vae_lr,
                    &mut self.rng,
                )?;
                Measure::Vae(Box::new(model))
            }
        };
        self.memory.threshold = compute_threshold(
            &self.memory.samples,
            &self.memory.centroid,
            &self.measure,
            self.cfg.alpha,
            self.cfg.quantile,
        )?;
        Ok(())
    }

    fn detect(&mut self, index: u64, window: Window, report: &mut StepReport) -> Result<()> {
        let clock = Instant::now();
        let score = self.measure.score(&window.values, &self.memory.centroid)?;
        let threshold = self.memory.threshold;
        // A score equal to the threshold counts as no change.
        let change = score > threshold;
        report.decision_time = Some(clock.elapsed());
        report.scored = Some(TracePoint {
            index,
            score,
            threshold,
        });

        if change {
            let det = Detection {
                index,
                score,
                threshold_at: threshold,
            };
            self.detections.push(det);
            report.detection = Some(det);
            self.memory.clear();
            self.buffer.clear();
            self.phase = Phase::Collecting {
                target_remaining: self.cfg.min_memory,
            };
            return Ok(());
        }

        self.buffer.push(window);
        if self.buffer.len() > self.cfg.buffer {
            let outcome = run_update_phase(
                &mut self.memory,
                &self.buffer,
                &self.cfg,
                &mut self.measure,
                &mut self.rng,
            )?;
            self.buffer.clear();
            self.updates += 1;
            report.update = Some(outcome);
        }
        Ok(())
    }
}

impl OnlineDetector for Mocpd {
    fn observe(&mut self, point: SeriesPoint) -> Result<StepReport> {
        self.step(point)
    }
}

/// Output of a batch run over a whole stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamOutput {
    pub detections: Vec<Detection>,
    pub trace: Vec<TracePoint>,
    pub decision_times: Vec<Duration>,
}

/// Feeds every point through any online detector, collecting events.
pub fn run_detector<D: OnlineDetector + ?Sized>(
    detector: &mut D,
    points: &[SeriesPoint],
) -> Result<StreamOutput> {
    let mut out = StreamOutput::default();
    for &p in points {
        let rep = detector.observe(p)?;
        if let Some(t) = rep.scored {
            out.trace.push(t);
        }
        if let Some(d) = rep.detection {
            out.detections.push(d);
        }
        if let Some(dt) = rep.decision_time {
            out.decision_times.push(dt);
        }
    }
    Ok(out)
}

/// Builds a detector from `cfg` and runs it over `points`.
pub fn run_stream(cfg: &DetectorConfig, points: &[SeriesPoint]) -> Result<StreamOutput> {
    let mut det = Mocpd::new(cfg.clone())?;
    run_detector(&mut det, points)
}

/// Wraps raw values as an index-contiguous stream starting at 0.
pub fn points_from_values(values: &[f64]) -> Vec<SeriesPoint> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| SeriesPoint::new(i as u64, v))
        .collect()
}
