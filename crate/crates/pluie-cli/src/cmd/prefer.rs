//! Pairwise preference evaluation with a fixed or calibrated tie margin.

use serde::Serialize;

use pluie::judges::Preference;
use pluie::stats::{
    pairwise_accuracy_tie_calibrated, preference_from_scores, random_preference_baseline,
    PreferenceRecord, RandomMode, RandomPreferenceReport,
};

use crate::config::{RunConfig, TiePolicy};
use crate::output::{write_report, InputStamp, RunClock};
use crate::records::read_jsonl_nonempty;
use crate::{lib_failure, Failure};

#[derive(Serialize)]
struct PredictedCounts {
    a: usize,
    b: usize,
    tie: usize,
}

/// Trials behind the seeded random baselines reported next to the metric.
const RANDOM_TRIALS: u32 = 1000;

#[derive(Serialize)]
struct Body {
    n: usize,
    epsilon: f64,
    accuracy: f64,
    predicted: PredictedCounts,
    /// How many tie margins the calibration considered, when it ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<usize>,
    /// Uniform and frequency-weighted random choosers on the same humans.
    random_baselines: Vec<RandomPreferenceReport>,
}

pub fn predictions(
    records: &[PreferenceRecord],
    epsilon: f64,
) -> Result<Vec<Preference>, Failure> {
    records
        .iter()
        .map(|r| preference_from_scores(r.score_a, r.score_b, epsilon).map_err(lib_failure))
        .collect()
}

fn counts(predicted: &[Preference]) -> PredictedCounts {
    let mut counts = PredictedCounts { a: 0, b: 0, tie: 0 };
    for p in predicted {
        match p {
            Preference::A => counts.a += 1,
            Preference::B => counts.b += 1,
            Preference::Tie => counts.tie += 1,
        }
    }
    counts
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;
    let policy = config.tie_policy.ok_or_else(|| {
        Failure::Usage("prefer needs exactly one of --epsilon or --calibrate-ties".into())
    })?;

    let records: Vec<PreferenceRecord> = read_jsonl_nonempty(input)?;
    let stamp = InputStamp::new(input, records.len())?;

    let (parameters, epsilon, candidates) = match policy {
        TiePolicy::Fixed(epsilon) => {
            (serde_json::json!({ "epsilon": epsilon, "seed": config.seed }), epsilon, None)
        }
        TiePolicy::Calibrate => {
            let calibration = pairwise_accuracy_tie_calibrated(&records).map_err(lib_failure)?;
            (
                serde_json::json!({ "calibrate-ties": true, "seed": config.seed }),
                calibration.epsilon,
                Some(calibration.candidates),
            )
        }
    };

    let humans: Vec<Preference> = records.iter().map(|r| r.human).collect();
    let random_baselines = [RandomMode::Uniform, RandomMode::Weighted]
        .into_iter()
        .map(|mode| {
            random_preference_baseline(&humans, mode, config.seed, RANDOM_TRIALS)
                .map_err(lib_failure)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let predicted = predictions(&records, epsilon)?;
    let correct = predicted.iter().zip(&records).filter(|(p, r)| **p == r.human).count();
    let body = Body {
        n: records.len(),
        epsilon,
        accuracy: correct as f64 / records.len() as f64,
        predicted: counts(&predicted),
        candidates,
        random_baselines,
    };

    let doc = super::ReportDoc { command: "prefer", input: stamp, parameters, body };
    write_report(out, &doc)?;
    clock.write_sidecar(out, "prefer", doc.input.records)?;
    println!(
        "evaluated {} preferences at epsilon {} (accuracy {:.4})",
        doc.body.n, doc.body.epsilon, doc.body.accuracy
    );
    Ok(())
}
