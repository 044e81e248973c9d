//! Consistency checks between intent alignment labels and bidirectional
//! equivalence scores.
//!
//! For an intent with two candidate phrasings, two things should hold of a
//! trustworthy equivalence metric. If both phrasings are aligned with the
//! intent, the metric should score them as mutually equivalent (both
//! directions above the threshold). And if the first phrasing is aligned
//! and the metric calls the pair mutually equivalent, the second phrasing
//! should be aligned too. Each case is audited for both, and the report
//! counts the violations separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One audited case: an intent, two phrasings with their alignment labels,
/// and the equivalence score in each direction. Scores are optional at the
/// type level so a partial join is detectable; checking requires both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCase {
    pub intent: String,
    pub phrase_one: String,
    pub phrase_two: String,
    pub one_aligned: bool,
    pub two_aligned: bool,
    /// Score of phrase_two as an equivalent of phrase_one.
    pub forward_score: Option<f64>,
    /// Score of phrase_one as an equivalent of phrase_two.
    pub backward_score: Option<f64>,
}

/// Audit outcome for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVerdict {
    pub intent: String,
    /// Both phrasings aligned, but the metric failed to score them as
    /// mutually equivalent.
    pub score_gap: bool,
    /// Metric scored the pair mutually equivalent and the first phrasing
    /// is aligned, but the second is not.
    pub alignment_gap: bool,
}

/// Violation counts plus the per-case verdicts behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub threshold: f64,
    pub checked: usize,
    pub score_gaps: usize,
    pub alignment_gaps: usize,
    pub verdicts: Vec<AlignmentVerdict>,
}

/// Audits every case against both conditions at the given threshold.
/// Errors if any case is missing a score direction.
pub fn check_alignment(cases: &[AlignmentCase], threshold: f64) -> Result<AlignmentReport> {
    let mut verdicts = Vec::with_capacity(cases.len());
    for case in cases {
        let (Some(forward), Some(backward)) = (case.forward_score, case.backward_score) else {
            return Err(Error::MissingScore(format!(
                "alignment case {:?} lacks a score direction",
                case.intent
            )));
        };
        let mutually_equivalent = forward > threshold && backward > threshold;
        verdicts.push(AlignmentVerdict {
            intent: case.intent.clone(),
            score_gap: case.one_aligned && case.two_aligned && !mutually_equivalent,
            alignment_gap: case.one_aligned && mutually_equivalent && !case.two_aligned,
        });
    }
    Ok(AlignmentReport {
        threshold,
        checked: verdicts.len(),
        score_gaps: verdicts.iter().filter(|v| v.score_gap).count(),
        alignment_gaps: verdicts.iter().filter(|v| v.alignment_gap).count(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(
        one_aligned: bool,
        two_aligned: bool,
        forward: f64,
        backward: f64,
    ) -> AlignmentCase {
        AlignmentCase {
            intent: "allow outbound dns".into(),
            phrase_one: "permit dns egress".into(),
            phrase_two: "allow udp 53 out".into(),
            one_aligned,
            two_aligned,
            forward_score: Some(forward),
            backward_score: Some(backward),
        }
    }

    #[test]
    fn mutually_high_scores_on_aligned_pair_pass() {
        let report = check_alignment(&[case(true, true, 3.0, 3.0)], 0.0).unwrap();
        assert_eq!(report.score_gaps, 0);
        assert_eq!(report.alignment_gaps, 0);
        assert_eq!(report.checked, 1);
    }

    #[test]
    fn aligned_pair_with_one_low_direction_is_a_score_gap() {
        let report = check_alignment(&[case(true, true, -1.0, 3.0)], 0.0).unwrap();
        assert_eq!(report.score_gaps, 1);
        assert_eq!(report.alignment_gaps, 0);
        assert!(report.verdicts[0].score_gap);
    }

    #[test]
    fn high_scores_with_misaligned_second_is_an_alignment_gap() {
        let report = check_alignment(&[case(true, false, 2.0, 1.5)], 0.0).unwrap();
        assert_eq!(report.score_gaps, 0);
        assert_eq!(report.alignment_gaps, 1);
        assert!(report.verdicts[0].alignment_gap);
    }

    #[test]
    fn unaligned_first_phrase_triggers_nothing() {
        let report = check_alignment(
            &[case(false, true, 5.0, 5.0), case(false, false, -5.0, -5.0)],
            0.0,
        )
        .unwrap();
        assert_eq!(report.score_gaps, 0);
        assert_eq!(report.alignment_gaps, 0);
    }

    #[test]
    fn threshold_is_strict() {
        // Scores exactly at the threshold do not count as equivalent.
        let report = check_alignment(&[case(true, true, 0.0, 3.0)], 0.0).unwrap();
        assert_eq!(report.score_gaps, 1);
        // And therefore cannot create an alignment gap either.
        let report = check_alignment(&[case(true, false, 0.0, 3.0)], 0.0).unwrap();
        assert_eq!(report.alignment_gaps, 0);
    }

    #[test]
    fn missing_direction_is_an_error() {
        let mut broken = case(true, true, 1.0, 1.0);
        broken.backward_score = None;
        let err = check_alignment(&[broken], 0.0).unwrap_err();
        assert!(matches!(err, Error::MissingScore(_)));
    }

    #[test]
    fn counts_add_up_over_mixed_cases() {
        let cases = vec![
            case(true, true, 3.0, 3.0),
            case(true, true, -1.0, 3.0),
            case(true, false, 2.0, 2.0),
            case(false, true, 2.0, 2.0),
        ];
        let report = check_alignment(&cases, 0.0).unwrap();
        assert_eq!(report.checked, 4);
        assert_eq!(report.score_gaps, 1);
        assert_eq!(report.alignment_gaps, 1);
        assert_eq!(report.verdicts.len(), 4);
    }
}
