//! Agreement report: Cohen's kappa, Cramér's V, and pairwise accuracy
//! between a metric (or judge) and the human labels.
//!
//! Score-based preference files are compared at the calibrated tie margin
//! unless --epsilon fixes one. Judge files carry discrete verdicts, so no
//! margin applies there; invalid verdicts are counted and excluded.

use serde::Serialize;

use pluie::judges::{JudgeKind, JudgeValue, Preference, YesNo};
use pluie::stats::{
    cohens_kappa, cramers_v, pairwise_accuracy_tie_calibrated, ContingencyTable,
    PreferenceRecord, Stat,
};

use crate::config::{RunConfig, TiePolicy};
use crate::output::{write_report, InputStamp, RunClock};
use crate::records::{read_jsonl_nonempty, JudgedComparison, JudgedPair};
use crate::{lib_failure, Failure};

#[derive(Serialize)]
struct Body {
    n: usize,
    /// Records whose verdict survived parsing; equal to `n` for score files.
    valid: usize,
    invalid_verdicts: usize,
    /// Tie margin used for score-based preferences; N/A for judges.
    epsilon: Stat,
    accuracy: f64,
    kappa: Stat,
    cramers_v: Stat,
    /// How many tie margins the calibration considered, when it ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<usize>,
}

fn agreement_stats<T: Ord + Copy>(pairs: &[(T, T)]) -> Result<(Stat, Stat), Failure> {
    let table = ContingencyTable::from_pairs(pairs).map_err(lib_failure)?;
    let kappa = cohens_kappa(&table).map_err(lib_failure)?;
    let v = cramers_v(&table).map_err(lib_failure)?;
    Ok((kappa, v))
}

fn score_preferences(config: &RunConfig, input: &std::path::Path) -> Result<Body, Failure> {
    let records: Vec<PreferenceRecord> = read_jsonl_nonempty(input)?;
    let (epsilon, candidates) = match config.tie_policy.unwrap_or(TiePolicy::Calibrate) {
        TiePolicy::Fixed(epsilon) => (epsilon, None),
        TiePolicy::Calibrate => {
            let calibration = pairwise_accuracy_tie_calibrated(&records).map_err(lib_failure)?;
            (calibration.epsilon, Some(calibration.candidates))
        }
    };
    let predicted = super::prefer::predictions(&records, epsilon)?;
    let pairs: Vec<(Preference, Preference)> =
        predicted.iter().zip(&records).map(|(p, r)| (*p, r.human)).collect();
    let correct = pairs.iter().filter(|(p, h)| p == h).count();
    let (kappa, v) = agreement_stats(&pairs)?;
    Ok(Body {
        n: records.len(),
        valid: records.len(),
        invalid_verdicts: 0,
        epsilon: Stat::Value(epsilon),
        accuracy: correct as f64 / records.len() as f64,
        kappa,
        cramers_v: v,
        candidates,
    })
}

fn require_human<T>(id: &str, human: Option<T>) -> Result<T, Failure> {
    human.ok_or_else(|| {
        Failure::Data(format!("record {id:?} has no human label; cannot score agreement"))
    })
}

fn judged_yesno(input: &std::path::Path) -> Result<Body, Failure> {
    let records: Vec<JudgedPair> = read_jsonl_nonempty(input)?;
    let mut pairs: Vec<(bool, bool)> = Vec::with_capacity(records.len());
    let mut invalid = 0usize;
    for record in &records {
        let human = require_human(&record.id, record.human)?;
        match record.verdict.value {
            Some(JudgeValue::YesNo(answer)) => pairs.push((answer == YesNo::Yes, human)),
            _ => invalid += 1,
        }
    }
    finish_judged(records.len(), invalid, &pairs)
}

fn judged_comparisons(input: &std::path::Path) -> Result<Body, Failure> {
    let records: Vec<JudgedComparison> = read_jsonl_nonempty(input)?;
    let mut pairs: Vec<(Preference, Preference)> = Vec::with_capacity(records.len());
    let mut invalid = 0usize;
    for record in &records {
        let human = require_human(&record.id, record.human)?;
        match record.predicted {
            Some(predicted) => pairs.push((predicted, human)),
            None => invalid += 1,
        }
    }
    finish_judged(records.len(), invalid, &pairs)
}

fn finish_judged<T: Ord + Copy>(
    n: usize,
    invalid: usize,
    pairs: &[(T, T)],
) -> Result<Body, Failure> {
    if pairs.is_empty() {
        return Err(Failure::Data(format!(
            "no valid verdicts to agree on ({invalid} invalid of {n})"
        )));
    }
    let correct = pairs.iter().filter(|(p, h)| p == h).count();
    let (kappa, v) = agreement_stats(pairs)?;
    Ok(Body {
        n,
        valid: pairs.len(),
        invalid_verdicts: invalid,
        epsilon: Stat::NotApplicable,
        accuracy: correct as f64 / pairs.len() as f64,
        kappa,
        cramers_v: v,
        candidates: None,
    })
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;

    let body = match config.judge {
        None => score_preferences(config, input)?,
        Some(JudgeKind::YesNo) => judged_yesno(input)?,
        Some(JudgeKind::Choice) | Some(JudgeKind::Likert) => judged_comparisons(input)?,
    };
    let parameters = match config.judge {
        None => serde_json::json!({ "epsilon": body.epsilon }),
        Some(kind) => serde_json::json!({ "judge": kind }),
    };

    let stamp = InputStamp::new(input, body.n)?;
    let doc = super::ReportDoc { command: "agree", input: stamp, parameters, body };
    write_report(out, &doc)?;
    clock.write_sidecar(out, "agree", doc.body.n)?;
    println!(
        "agreement over {} records: kappa {}, accuracy {:.4}, {} invalid",
        doc.body.valid, doc.body.kappa, doc.body.accuracy, doc.body.invalid_verdicts
    );
    Ok(())
}
