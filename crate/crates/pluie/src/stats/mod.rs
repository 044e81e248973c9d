//! Everything downstream of raw scores: classification metrics, threshold
//! sweeps, rating binarization, preference derivation with tie calibration,
//! agreement statistics, seeded random baselines, and the alignment
//! condition checker.
//!
//! Degenerate inputs produce first-class outcomes, never silent zeros: an
//! undefined statistic is [`Stat::NotApplicable`], a collapsed sweep or an
//! empty denominator sets an explicit flag. A constant metric and a useless
//! one look very different in a report, and conflating them buries exactly
//! the failures these statistics exist to surface.

mod agreement;
mod alignment;
mod classify;
mod preference;
mod random;

pub use agreement::{cohens_kappa, cramers_v, ContingencyTable};
pub use alignment::{check_alignment, AlignmentCase, AlignmentReport, AlignmentVerdict};
pub use classify::{classify, sweep_threshold, ClassificationReport, LabeledExample, ThresholdSweep};
pub use preference::{
    binarize_mushra, binarize_mushra_at, pairwise_accuracy_tie_calibrated, preference_from_scores,
    MushraRating, PreferenceRecord, TieCalibration,
};
pub use random::{
    random_binary_baseline, random_preference_baseline, RandomBaselineReport, RandomMode,
    RandomPreferenceReport,
};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A statistic that can be undefined on degenerate inputs. Serializes as a
/// plain number, or as the string "N/A" when not applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stat {
    Value(f64),
    NotApplicable,
}

impl Stat {
    pub fn value(self) -> Option<f64> {
        match self {
            Stat::Value(v) => Some(v),
            Stat::NotApplicable => None,
        }
    }

    pub fn is_na(self) -> bool {
        self == Stat::NotApplicable
    }
}

impl From<f64> for Stat {
    fn from(v: f64) -> Self {
        Stat::Value(v)
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stat::Value(v) => write!(f, "{v}"),
            Stat::NotApplicable => f.write_str("N/A"),
        }
    }
}

impl Serialize for Stat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Stat::Value(v) => serializer.serialize_f64(*v),
            Stat::NotApplicable => serializer.serialize_str("N/A"),
        }
    }
}

impl<'de> Deserialize<'de> for Stat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(Stat::Value(v)),
            Repr::Text(t) if t == "N/A" => Ok(Stat::NotApplicable),
            Repr::Text(t) => Err(D::Error::custom(format!("expected a number or \"N/A\", got {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_serializes_number_or_na() {
        assert_eq!(serde_json::to_string(&Stat::Value(0.5)).unwrap(), "0.5");
        assert_eq!(serde_json::to_string(&Stat::NotApplicable).unwrap(), "\"N/A\"");
        assert_eq!(serde_json::from_str::<Stat>("0.25").unwrap(), Stat::Value(0.25));
        assert_eq!(serde_json::from_str::<Stat>("\"N/A\"").unwrap(), Stat::NotApplicable);
        assert!(serde_json::from_str::<Stat>("\"none\"").is_err());
        assert_eq!(Stat::NotApplicable.to_string(), "N/A");
        assert_eq!(Stat::Value(1.0).value(), Some(1.0));
        assert!(Stat::NotApplicable.is_na());
    }
}
