//! Score-derived preferences, tie calibration, and rating binarization.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::judges::Preference;

/// One pairwise comparison: a score for each side plus the human verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub human: Preference,
}

/// The five MUSHRA rating grades, ordered worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MushraRating {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

impl FromStr for MushraRating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "bad" => Ok(MushraRating::Bad),
            "poor" => Ok(MushraRating::Poor),
            "fair" => Ok(MushraRating::Fair),
            "good" => Ok(MushraRating::Good),
            "excellent" => Ok(MushraRating::Excellent),
            _ => Err(Error::UnknownRating(s.to_string())),
        }
    }
}

/// Binarizes a MUSHRA rating at the standard cutoff: Good and Excellent
/// count as positive.
pub fn binarize_mushra(rating: MushraRating) -> bool {
    binarize_mushra_at(rating, MushraRating::Good)
}

/// Binarization with a configurable cutoff: positive iff the rating is at
/// least `cutoff`.
pub fn binarize_mushra_at(rating: MushraRating, cutoff: MushraRating) -> bool {
    rating >= cutoff
}

/// Derives a preference from two scores: a tie inside the epsilon margin,
/// otherwise the larger score wins.
pub fn preference_from_scores(score_a: f64, score_b: f64, tie_epsilon: f64) -> Result<Preference> {
    if !(tie_epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(tie_epsilon));
    }
    debug_assert!(score_a.is_finite() && score_b.is_finite());
    if (score_a - score_b).abs() <= tie_epsilon {
        Ok(Preference::Tie)
    } else if score_a > score_b {
        Ok(Preference::A)
    } else {
        Ok(Preference::B)
    }
}

/// Result of tie calibration: the winning margin and its accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieCalibration {
    pub epsilon: f64,
    pub accuracy: f64,
    /// Number of epsilon candidates evaluated.
    pub candidates: usize,
}

/// Pairwise accuracy with tie calibration: picks the tie margin that
/// maximizes agreement with the human preferences.
///
/// Epsilon candidates are 0 plus the midpoints of consecutive sorted
/// distinct score gaps |score_a − score_b|; those realize every achievable
/// tie/no-tie partition. Accuracy ties go to the smallest epsilon, so data
/// that never rewards predicting a tie calibrates to 0.
pub fn pairwise_accuracy_tie_calibrated(records: &[PreferenceRecord]) -> Result<TieCalibration> {
    if records.is_empty() {
        return Err(Error::EmptyInput("records"));
    }
    let mut gaps: Vec<f64> = records.iter().map(|r| (r.score_a - r.score_b).abs()).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    gaps.dedup();

    let candidates: Vec<f64> = std::iter::once(0.0)
        .chain(gaps.windows(2).map(|w| (w[0] + w[1]) / 2.0))
        .collect();

    let mut best: Option<TieCalibration> = None;
    for &epsilon in &candidates {
        let hits = records
            .iter()
            .filter(|r| {
                preference_from_scores(r.score_a, r.score_b, epsilon).expect("epsilon >= 0")
                    == r.human
            })
            .count();
        let accuracy = hits as f64 / records.len() as f64;
        // Strict improvement only: earlier (smaller) epsilons win ties.
        if best.map_or(true, |b| accuracy > b.accuracy) {
            best = Some(TieCalibration { epsilon, accuracy, candidates: candidates.len() });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preference_respects_margin() {
        assert_eq!(preference_from_scores(2.0, 1.0, 0.1).unwrap(), Preference::A);
        assert_eq!(preference_from_scores(1.0, 1.0, 0.0).unwrap(), Preference::Tie);
        assert_eq!(preference_from_scores(1.00, 1.05, 0.1).unwrap(), Preference::Tie);
        assert_eq!(preference_from_scores(1.0, 2.0, 0.5).unwrap(), Preference::B);
    }

    #[test]
    fn preference_rejects_bad_epsilon() {
        assert!(matches!(
            preference_from_scores(1.0, 2.0, -0.1),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(preference_from_scores(1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn mushra_binarizes_at_good() {
        assert!(binarize_mushra(MushraRating::Excellent));
        assert!(binarize_mushra(MushraRating::Good));
        assert!(!binarize_mushra(MushraRating::Fair));
        assert!(!binarize_mushra(MushraRating::Bad));
        // Stricter cutoff flips Good.
        assert!(!binarize_mushra_at(MushraRating::Good, MushraRating::Excellent));
        assert!(binarize_mushra_at(MushraRating::Poor, MushraRating::Poor));
    }

    #[test]
    fn mushra_parsing_is_case_insensitive_and_strict() {
        assert_eq!("excellent".parse::<MushraRating>().unwrap(), MushraRating::Excellent);
        assert_eq!(" Fair ".parse::<MushraRating>().unwrap(), MushraRating::Fair);
        assert!(matches!(
            "Superb".parse::<MushraRating>(),
            Err(Error::UnknownRating(s)) if s == "Superb"
        ));
    }

    fn records(rows: &[(f64, f64, Preference)]) -> Vec<PreferenceRecord> {
        rows.iter()
            .enumerate()
            .map(|(i, &(score_a, score_b, human))| PreferenceRecord {
                id: format!("r{i}"),
                score_a,
                score_b,
                human,
            })
            .collect()
    }

    #[test]
    fn calibration_finds_the_margin_that_recovers_ties() {
        // Gaps 0.5, 0.2, 0.05; a margin between 0.05 and 0.2 gets all three.
        let data = records(&[
            (1.5, 1.0, Preference::A),
            (1.0, 1.2, Preference::B),
            (1.05, 1.0, Preference::Tie),
        ]);
        let cal = pairwise_accuracy_tie_calibrated(&data).unwrap();
        assert_eq!(cal.accuracy, 1.0);
        assert!(cal.epsilon > 0.05 && cal.epsilon < 0.2, "epsilon = {}", cal.epsilon);
        assert_eq!(cal.candidates, 3);

        // Forcing epsilon to zero loses the tie record.
        let at_zero = data
            .iter()
            .filter(|r| preference_from_scores(r.score_a, r.score_b, 0.0).unwrap() == r.human)
            .count();
        assert_eq!(at_zero, 2);
    }

    #[test]
    fn calibration_degenerate_all_tied() {
        let data = records(&[(1.0, 1.0, Preference::Tie), (2.0, 2.0, Preference::Tie)]);
        let cal = pairwise_accuracy_tie_calibrated(&data).unwrap();
        assert_eq!(cal.epsilon, 0.0);
        assert_eq!(cal.accuracy, 1.0);
    }

    #[test]
    fn calibration_rejects_empty_input() {
        assert!(pairwise_accuracy_tie_calibrated(&[]).is_err());
    }

    proptest! {
        // With no human ties and no zero gaps, a zero margin is optimal:
        // widening it only converts correct picks into wrong ties.
        #[test]
        fn no_ties_calibrates_to_zero(
            rows in proptest::collection::vec(
                (0.1..5.0f64, any::<bool>(), any::<bool>()),
                1..20,
            ),
        ) {
            let data: Vec<PreferenceRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, &(gap, a_side, human_a))| PreferenceRecord {
                    id: format!("r{i}"),
                    score_a: if a_side { gap } else { 0.0 },
                    score_b: if a_side { 0.0 } else { gap },
                    human: if human_a { Preference::A } else { Preference::B },
                })
                .collect();
            let cal = pairwise_accuracy_tie_calibrated(&data).unwrap();
            prop_assert_eq!(cal.epsilon, 0.0);
        }

        // Scaling both scores and the margin preserves the preference.
        #[test]
        fn preference_is_scale_invariant(
            a in -5.0..5.0f64,
            b in -5.0..5.0f64,
            eps in 0.0..2.0f64,
            scale in 0.01..50.0f64,
        ) {
            // Rounding can flip decisions that sit exactly on the margin.
            prop_assume!(((a - b).abs() - eps).abs() > 1e-6);
            let base = preference_from_scores(a, b, eps).unwrap();
            let scaled = preference_from_scores(a * scale, b * scale, eps * scale).unwrap();
            prop_assert_eq!(base, scaled);
        }
    }
}
