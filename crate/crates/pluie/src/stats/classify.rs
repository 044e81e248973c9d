//! Threshold classification and the F1-maximizing threshold sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored example with its human label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub score: f64,
    pub label: bool,
}

/// Confusion counts and derived metrics at one threshold. Empty-denominator
/// precision or recall is reported as 0.0 with its degenerate flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate_precision: bool,
    pub degenerate_recall: bool,
}

/// Classifies each example as positive iff its score is strictly above the
/// threshold, then derives the usual metrics from the confusion counts.
/// The strict comparison makes a natural threshold of 0 classify a score
/// of exactly 0 as negative.
pub fn classify(examples: &[LabeledExample], threshold: f64) -> Result<ClassificationReport> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("examples"));
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for ex in examples {
        debug_assert!(ex.score.is_finite(), "non-finite score for {}", ex.id);
        match (ex.score > threshold, ex.label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassificationReport {
        threshold,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fneg,
        accuracy: ratio(tp + tn, examples.len()),
        precision,
        recall,
        f1,
        degenerate_precision: tp + fp == 0,
        degenerate_recall: tp + fneg == 0,
    })
}

/// A full threshold sweep: the F1-maximizing report plus the whole curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub best: ClassificationReport,
    pub curve: Vec<ClassificationReport>,
    /// All scores were identical, so only one candidate existed.
    pub degenerate: bool,
}

/// Sweeps candidate thresholds and returns the F1-maximizing one.
///
/// Candidates are the midpoints of consecutive sorted distinct scores plus
/// one candidate below the minimum and one above the maximum; together
/// those realize every achievable decision boundary, so nothing off the
/// grid can beat the winner. F1 ties break toward higher precision, then
/// toward the threshold of smaller magnitude.
pub fn sweep_threshold(examples: &[LabeledExample]) -> Result<ThresholdSweep> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("examples"));
    }
    let mut scores: Vec<f64> = examples.iter().map(|e| e.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    scores.dedup();

    let degenerate = scores.len() < 2;
    let candidates: Vec<f64> = if degenerate {
        vec![scores[0] - 1.0]
    } else {
        std::iter::once(scores[0] - 1.0)
            .chain(scores.windows(2).map(|w| (w[0] + w[1]) / 2.0))
            .chain(std::iter::once(scores[scores.len() - 1] + 1.0))
            .collect()
    };

    let mut curve = Vec::with_capacity(candidates.len());
    for threshold in candidates {
        curve.push(classify(examples, threshold)?);
    }
    let best = *curve
        .iter()
        .reduce(|best, next| {
            let beats = next.f1 > best.f1
                || (next.f1 == best.f1 && next.precision > best.precision)
                || (next.f1 == best.f1
                    && next.precision == best.precision
                    && next.threshold.abs() < best.threshold.abs());
            if beats {
                next
            } else {
                best
            }
        })
        .expect("curve non-empty");
    Ok(ThresholdSweep { best, curve, degenerate })
}
