//! Seeded random predictors, the floor every metric must clear.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judges::Preference;

/// How the random predictor draws its answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomMode {
    /// Every category equiprobable.
    Uniform,
    /// Categories drawn with the empirical human distribution.
    Weighted,
}

/// Mean classification metrics of a random binary predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBaselineReport {
    pub mode: RandomMode,
    pub seed: u64,
    pub trials: u32,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Runs `trials` random predictions over the labels and averages the
/// classification metrics. Deterministic for a given seed.
pub fn random_binary_baseline(
    labels: &[bool],
    mode: RandomMode,
    seed: u64,
    trials: u32,
) -> Result<RandomBaselineReport> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    if trials == 0 {
        return Err(Error::Data("random baseline needs at least one trial".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let p_positive = match mode {
        RandomMode::Uniform => 0.5,
        RandomMode::Weighted => positives as f64 / labels.len() as f64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut acc, mut prec, mut rec, mut f1) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..trials {
        let (mut tp, mut fp, mut tn, mut fneg) = (0u64, 0u64, 0u64, 0u64);
        for &label in labels {
            let predicted = rng.gen_bool(p_positive);
            match (predicted, label) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fneg += 1,
            }
        }
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fneg);
        acc += ratio(tp + tn, (labels.len()) as u64);
        prec += p;
        rec += r;
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let t = trials as f64;
    Ok(RandomBaselineReport {
        mode,
        seed,
        trials,
        accuracy: acc / t,
        precision: prec / t,
        recall: rec / t,
        f1: f1 / t,
    })
}

/// Mean agreement of a random preference predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPreferenceReport {
    pub mode: RandomMode,
    pub seed: u64,
    pub trials: u32,
    pub accuracy: f64,
}

/// Runs `trials` random preference draws against the human verdicts and
/// averages the agreement rate. Deterministic for a given seed.
pub fn random_preference_baseline(
    human: &[Preference],
    mode: RandomMode,
    seed: u64,
    trials: u32,
) -> Result<RandomPreferenceReport> {
    if human.is_empty() {
        return Err(Error::EmptyInput("preferences"));
    }
    if trials == 0 {
        return Err(Error::Data("random baseline needs at least one trial".into()));
    }
    const CATEGORIES: [Preference; 3] = [Preference::A, Preference::B, Preference::Tie];
    let weights: Vec<f64> = match mode {
        RandomMode::Uniform => vec![1.0; CATEGORIES.len()],
        RandomMode::Weighted => CATEGORIES
            .iter()
            .map(|c| human.iter().filter(|&h| h == c).count() as f64)
            .collect(),
    };
    let draw = WeightedIndex::new(&weights)
        .map_err(|e| Error::Data(format!("degenerate preference weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let hits = human
            .iter()
            .filter(|&&h| CATEGORIES[draw.sample(&mut rng)] == h)
            .count();
        acc += hits as f64 / human.len() as f64;
    }
    Ok(RandomPreferenceReport { mode, seed, trials, accuracy: acc / trials as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_on_balanced_labels_hovers_at_half() {
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let report = random_binary_baseline(&labels, RandomMode::Uniform, 7, 2000).unwrap();
        assert!((report.accuracy - 0.5).abs() < 0.02, "accuracy = {}", report.accuracy);
        assert!((report.recall - 0.5).abs() < 0.02);
    }

    #[test]
    fn weighted_recall_tracks_the_positive_rate() {
        // One third positive: prediction is independent of the label, so
        // expected recall equals P(predict positive) = 1/3.
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let report = random_binary_baseline(&labels, RandomMode::Weighted, 11, 4000).unwrap();
        assert!((report.recall - 1.0 / 3.0).abs() < 0.02, "recall = {}", report.recall);
        assert!((report.precision - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn same_seed_same_report() {
        let labels = [true, false, true, true, false];
        let a = random_binary_baseline(&labels, RandomMode::Uniform, 42, 50).unwrap();
        let b = random_binary_baseline(&labels, RandomMode::Uniform, 42, 50).unwrap();
        assert_eq!(a, b);
        let c = random_binary_baseline(&labels, RandomMode::Uniform, 43, 50).unwrap();
        assert_ne!(a.accuracy, c.accuracy);
    }

    #[test]
    fn zero_trials_and_empty_input_error() {
        assert!(random_binary_baseline(&[true], RandomMode::Uniform, 0, 0).is_err());
        assert!(random_binary_baseline(&[], RandomMode::Uniform, 0, 10).is_err());
        assert!(random_preference_baseline(&[], RandomMode::Uniform, 0, 10).is_err());
        assert!(random_preference_baseline(&[Preference::A], RandomMode::Uniform, 0, 0).is_err());
    }

    #[test]
    fn uniform_preferences_land_near_one_third() {
        let human = vec![Preference::A; 60];
        let report = random_preference_baseline(&human, RandomMode::Uniform, 3, 3000).unwrap();
        assert!((report.accuracy - 1.0 / 3.0).abs() < 0.02, "accuracy = {}", report.accuracy);
    }

    #[test]
    fn weighted_preferences_match_squared_frequencies() {
        // Human half A, half B: agreement rate is 0.5² + 0.5² = 0.5.
        let human: Vec<Preference> = (0..40)
            .map(|i| if i % 2 == 0 { Preference::A } else { Preference::B })
            .collect();
        let report = random_preference_baseline(&human, RandomMode::Weighted, 5, 3000).unwrap();
        assert!((report.accuracy - 0.5).abs() < 0.02, "accuracy = {}", report.accuracy);
    }
}
