//! Binary classification of a scored file at a fixed or swept threshold.

use serde::Serialize;

use pluie::stats::{
    classify, random_binary_baseline, sweep_threshold, ClassificationReport,
    LabeledExample, RandomBaselineReport, RandomMode,
};

use crate::config::{RunConfig, ThresholdPolicy};
use crate::output::{write_report, InputStamp, RunClock};
use crate::records::{read_jsonl_nonempty, ScoredLine};
use crate::{lib_failure, Failure};

/// Trials behind the seeded random baselines reported next to the metric.
const RANDOM_TRIALS: u32 = 1000;

#[derive(Serialize)]
struct Body {
    /// True when the threshold came from a sweep rather than the flags.
    swept: bool,
    degenerate: bool,
    report: ClassificationReport,
    /// Uniform and class-weighted random predictors on the same labels.
    random_baselines: Vec<RandomBaselineReport>,
}

pub fn labeled_examples(lines: Vec<ScoredLine>) -> Result<Vec<LabeledExample>, Failure> {
    lines
        .into_iter()
        .map(|line| {
            let label = line.label.ok_or_else(|| {
                Failure::Data(format!("record {:?} has no label; cannot evaluate", line.id))
            })?;
            Ok(LabeledExample { id: line.id, score: line.score, label })
        })
        .collect()
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;
    let policy = config.threshold_policy.ok_or_else(|| {
        Failure::Usage("classify needs exactly one of --threshold or --sweep".into())
    })?;

    let lines: Vec<ScoredLine> = read_jsonl_nonempty(input)?;
    let examples = labeled_examples(lines)?;
    let stamp = InputStamp::new(input, examples.len())?;

    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let random_baselines = [RandomMode::Uniform, RandomMode::Weighted]
        .into_iter()
        .map(|mode| {
            random_binary_baseline(&labels, mode, config.seed, RANDOM_TRIALS)
                .map_err(lib_failure)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (parameters, body) = match policy {
        ThresholdPolicy::Fixed(threshold) => {
            let report = classify(&examples, threshold).map_err(lib_failure)?;
            (
                serde_json::json!({ "threshold": threshold, "seed": config.seed }),
                Body { swept: false, degenerate: false, report, random_baselines },
            )
        }
        ThresholdPolicy::Sweep => {
            let sweep = sweep_threshold(&examples).map_err(lib_failure)?;
            (
                serde_json::json!({ "sweep": true, "seed": config.seed }),
                Body {
                    swept: true,
                    degenerate: sweep.degenerate,
                    report: sweep.best,
                    random_baselines,
                },
            )
        }
    };

    let doc = super::ReportDoc { command: "classify", input: stamp, parameters, body };
    write_report(out, &doc)?;
    clock.write_sidecar(out, "classify", doc.input.records)?;
    println!(
        "classified {} records at threshold {} (F1 {:.4})",
        doc.input.records, doc.body.report.threshold, doc.body.report.f1
    );
    Ok(())
}
