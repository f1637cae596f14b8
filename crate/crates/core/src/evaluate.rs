// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tolerance-window matching of detections to true change points, and the
//! precision / recall / F-beta / detection-delay metrics built on it.
//!
//! A detection `d` can only claim a true change point `t` with
//! `t <= d <= t + tolerance`. Truths are processed in time order and each
//! takes the earliest unclaimed detection in its window.

use serde::{Deserialize, Serialize};

use crate::simulate::SAMPLES_PER_DAY;

/// Result of matching one sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    /// `(truth, detection)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

/// Greedy one-to-one matching. Inputs need not be sorted; they are sorted
/// internally.
pub fn match_detections(truth: &[usize], detections: &[usize], tolerance: usize) -> Matching {
    let mut truth = truth.to_vec();
    truth.sort_unstable();
    let mut dets = detections.to_vec();
    dets.sort_unstable();

    let mut used = vec![false; dets.len()];
    let mut out = Matching::default();
    for &t in &truth {
        let first = dets.partition_point(|&d| d < t);
        let hit = (first..dets.len())
            .take_while(|&j| dets[j] <= t + tolerance)
            .find(|&j| !used[j]);
        match hit {
            Some(j) => {
                used[j] = true;
                out.pairs.push((t, dets[j]));
            }
            None => out.false_negatives.push(t),
        }
    }
    out.false_positives = dets
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(&d, _)| d)
        .collect();
    out
}

/// `(1 + β²) P R / (β² P + R)`, or 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Mean `|d - t|` over matched pairs; `None` when there are no pairs.
pub fn mean_delay(pairs: &[(usize, usize)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let total: f64 = pairs.iter().map(|&(t, d)| t.abs_diff(d) as f64).sum();
    Some(total / pairs.len() as f64)
}

/// Scores of one sequence or of a pooled corpus. Undefined ratios are
/// reported as 0 with the matching `*_defined` flag cleared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub mean_delay_samples: f64,
    pub mean_delay_days: f64,
    pub recall_defined: bool,
    pub precision_defined: bool,
    pub delay_defined: bool,
}

impl Scores {
    fn from_counts(tp: usize, fp: usize, fn_: usize, delay_sum: f64, beta: f64) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, false)
            } else {
                (num as f64 / den as f64, true)
            }
        };
        let (recall, recall_defined) = ratio(tp, tp + fn_);
        let (precision, precision_defined) = ratio(tp, tp + fp);
        let (delay, delay_defined) = if tp == 0 {
            (0.0, false)
        } else {
            (delay_sum / tp as f64, true)
        };
        Self {
            tp,
            fp,
            fn_,
            recall,
            precision,
            f_beta: f_beta(precision, recall, beta),
            beta,
            mean_delay_samples: delay,
            mean_delay_days: delay / SAMPLES_PER_DAY as f64,
            recall_defined,
            precision_defined,
            delay_defined,
        }
    }

    pub fn from_matching(m: &Matching, beta: f64) -> Self {
        let delay_sum: f64 = m.pairs.iter().map(|&(t, d)| t.abs_diff(d) as f64).sum();
        Self::from_counts(
            m.pairs.len(),
            m.false_positives.len(),
            m.false_negatives.len(),
            delay_sum,
            beta,
        )
    }
}

/// Pooled scores plus the per-sequence breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub pooled: Scores,
    pub tolerance: usize,
    /// How sequences are combined; always `"micro"` (pooled counts).
    pub averaging: String,
    pub per_sequence: Vec<Scores>,
}

/// Matches every `(truth, detections)` pair and pools the counts across
/// sequences (micro-averaging).
pub fn evaluate_corpus(
    sequences: &[(Vec<usize>, Vec<usize>)],
    tolerance: usize,
    beta: f64,
) -> EvalReport {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut delay_sum = 0.0;
    let mut per_sequence = Vec::with_capacity(sequences.len());
    for (truth, dets) in sequences {
        let m = match_detections(truth, dets, tolerance);
        tp += m.pairs.len();
        fp += m.false_positives.len();
        fn_ += m.false_negatives.len();
        delay_sum += m.pairs.iter().map(|&(t, d)| t.abs_diff(d) as f64).sum::<f64>();
        per_sequence.push(Scores::from_matching(&m, beta));
    }
    EvalReport {
        pooled: Scores::from_counts(tp, fp, fn_, delay_sum, beta),
        tolerance,
        averaging: "micro".to_string(),
        per_sequence,
    }
}
