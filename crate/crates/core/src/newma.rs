// SPDX-License-Identifier: MIT OR Apache-2.0

//! NEWMA reference baseline: two exponentially weighted moving averages with
//! different forgetting factors, alarming when their gap exceeds a rolling
//! mean-plus-`c`-sigma band of its own recent history.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Detection, SeriesPoint};
use crate::detector::{OnlineDetector, StepReport, TracePoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewmaConfig {
    pub lambda_fast: f64,
    pub lambda_slow: f64,
    /// Band width in rolling standard deviations.
    pub c: f64,
    /// Statistics kept for the rolling band.
    pub history: usize,
    /// Statistics required before alarms are allowed.
    pub warmup: usize,
}

impl Default for NewmaConfig {
    fn default() -> Self {
        Self {
            lambda_fast: 0.2,
            lambda_slow: 0.02,
            c: 4.0,
            history: 500,
            warmup: 20,
        }
    }
}

impl NewmaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |l: f64| l > 0.0 && l < 1.0;
        if !unit(self.lambda_fast) || !unit(self.lambda_slow) {
            return Err(Error::InvalidArgument(
                "NEWMA forgetting factors must lie in (0, 1)".into(),
            ));
        }
        if self.lambda_fast <= self.lambda_slow {
            return Err(Error::InvalidArgument(
                "NEWMA needs lambda_fast > lambda_slow".into(),
            ));
        }
        if !(self.c.is_finite() && self.c > 0.0) || self.history < 2 || self.warmup < 2 {
            return Err(Error::InvalidArgument(
                "NEWMA band needs c > 0 and history, warmup >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Newma {
    cfg: NewmaConfig,
    fast: f64,
    slow: f64,
    primed: bool,
    stats: VecDeque<f64>,
    cursor: u64,
}

impl Newma {
    pub fn new(cfg: NewmaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            stats: VecDeque::with_capacity(cfg.history),
            cfg,
            fast: 0.0,
            slow: 0.0,
            primed: false,
            cursor: 0,
        })
    }

    /// Seeds both averages at `level` and forgets the statistic history.
    fn reset(&mut self, level: f64) {
        self.fast = level;
        self.slow = level;
        self.primed = true;
        self.stats.clear();
    }

    /// Current `|fast - slow|`.
    pub fn statistic(&self) -> f64 {
        (self.fast - self.slow).abs()
    }

    /// Feeds one value; returns the statistic, the band it was held to
    /// (infinite during warm-up) and whether it alarmed.
    pub fn update(&mut self, x: f64) -> (f64, f64, bool) {
        if !self.primed {
            self.reset(x);
        }
        let (lf, ls) = (self.cfg.lambda_fast, self.cfg.lambda_slow);
        self.fast = (1.0 - lf) * self.fast + lf * x;
        self.slow = (1.0 - ls) * self.slow + ls * x;
        let stat = self.statistic();

        let threshold = if self.stats.len() >= self.cfg.warmup {
            let n = self.stats.len() as f64;
            let mean = self.stats.iter().sum::<f64>() / n;
            let var = self.stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
            mean + self.cfg.c * var.sqrt()
        } else {
            f64::INFINITY
        };
        let alarm = stat > threshold;
        if alarm {
            self.reset(x);
        } else {
            if self.stats.len() == self.cfg.history {
                self.stats.pop_front();
            }
            self.stats.push_back(stat);
        }
        (stat, threshold, alarm)
    }

    /// One point of the streaming interface.
    pub fn newma_step(&mut self, point: SeriesPoint) -> Result<Option<Detection>> {
        Ok(self.observe(point)?.detection)
    }
}

impl OnlineDetector for Newma {
    fn observe(&mut self, point: SeriesPoint) -> Result<StepReport> {
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
        self.cursor += 1;
        let clock = Instant::now();
        let (score, threshold, alarm) = self.update(point.value);
        let elapsed = clock.elapsed();
        let mut rep = StepReport {
            cleaned: point.value,
            decision_time: Some(elapsed),
            ..Default::default()
        };
        if threshold.is_finite() {
            rep.scored = Some(TracePoint {
                index: point.index,
                score,
                threshold,
            });
        }
        if alarm {
            rep.detection = Some(Detection {
                index: point.index,
                score,
                threshold_at: threshold,
            });
        }
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(n: &mut Newma, values: &[f64]) -> Vec<u64> {
        let start = n.cursor;
        values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                n.newma_step(SeriesPoint::new(start + i as u64, v))
                    .unwrap()
                    .map(|d| d.index)
            })
            .collect()
    }

    #[test]
    fn constant_stream_is_silent() {
        let mut n = Newma::new(NewmaConfig::default()).unwrap();
        assert!(feed(&mut n, &vec![7.0; 5000]).is_empty());
        assert!(n.statistic() < 1e-12);
    }

    #[test]
    fn jump_fires_quickly() {
        let mut n = Newma::new(NewmaConfig::default()).unwrap();
        let mut values = vec![0.0; 200];
        values.extend(vec![100.0; 200]);
        let hits = feed(&mut n, &values);
        assert!(!hits.is_empty());
        assert!(hits[0] >= 200 && hits[0] < 250, "{hits:?}");
    }

    #[test]
    fn step_response_matches_recurrence() {
        let cfg = NewmaConfig::default();
        let mut n = Newma::new(cfg.clone()).unwrap();
        n.update(0.0);
        let mut fast = 0.0f64;
        let mut slow = 0.0f64;
        for _ in 0..100 {
            let (stat, _, _) = n.update(1.0);
            fast = (1.0 - cfg.lambda_fast) * fast + cfg.lambda_fast;
            slow = (1.0 - cfg.lambda_slow) * slow + cfg.lambda_slow;
            assert!((stat - (fast - slow)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_factors() {
        let bad = NewmaConfig {
            lambda_fast: 0.01,
            lambda_slow: 0.02,
            ..Default::default()
        };
        assert!(Newma::new(bad).is_err());
        let bad = NewmaConfig {
            lambda_fast: 1.0,
            ..Default::default()
        };
        assert!(Newma::new(bad).is_err());
    }

    #[test]
    fn rejects_gaps_in_the_stream() {
        let mut n = Newma::new(NewmaConfig::default()).unwrap();
        assert!(n.newma_step(SeriesPoint::new(3, 0.0)).is_err());
    }
}
