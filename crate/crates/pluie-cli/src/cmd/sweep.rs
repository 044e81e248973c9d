//! Threshold sweep: best operating point plus the full curve.

use serde::Serialize;
use std::fmt::Write as _;

use pluie::stats::{sweep_threshold, ClassificationReport, ThresholdSweep};

use crate::config::{RunConfig, ThresholdPolicy};
use crate::output::{write_atomic, write_report, InputStamp, RunClock};
use crate::records::{read_jsonl_nonempty, ScoredLine};
use crate::{lib_failure, Failure};

#[derive(Serialize)]
struct Body {
    degenerate: bool,
    best: ClassificationReport,
    curve: Vec<ClassificationReport>,
}

fn curve_csv(sweep: &ThresholdSweep) -> String {
    let mut csv = String::from(
        "threshold,true_positives,false_positives,true_negatives,false_negatives,\
         accuracy,precision,recall,f1\n",
    );
    for point in &sweep.curve {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            point.threshold,
            point.true_positives,
            point.false_positives,
            point.true_negatives,
            point.false_negatives,
            point.accuracy,
            point.precision,
            point.recall,
            point.f1
        )
        .expect("string write");
    }
    csv
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;
    if let Some(ThresholdPolicy::Fixed(_)) = config.threshold_policy {
        return Err(Failure::Usage(
            "sweep derives the threshold itself; drop --threshold or use classify".into(),
        ));
    }

    let lines: Vec<ScoredLine> = read_jsonl_nonempty(input)?;
    let examples = super::classify::labeled_examples(lines)?;
    let stamp = InputStamp::new(input, examples.len())?;
    let sweep = sweep_threshold(&examples).map_err(lib_failure)?;

    if let Some(csv_path) = &config.csv {
        write_atomic(csv_path, curve_csv(&sweep).as_bytes())?;
    }

    let doc = super::ReportDoc {
        command: "sweep",
        input: stamp,
        parameters: serde_json::json!({ "sweep": true }),
        body: Body { degenerate: sweep.degenerate, best: sweep.best, curve: sweep.curve },
    };
    write_report(out, &doc)?;
    clock.write_sidecar(out, "sweep", doc.input.records)?;
    println!(
        "swept {} candidate thresholds; best F1 {:.4} at {}",
        doc.body.curve.len(),
        doc.body.best.f1,
        doc.body.best.threshold
    );
    Ok(())
}
