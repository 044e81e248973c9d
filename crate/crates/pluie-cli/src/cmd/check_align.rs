//! Audits bidirectionally scored intent/phrase cases against their expected
//! alignment labels.

use serde::Serialize;

use pluie::stats::{check_alignment, AlignmentCase, AlignmentReport};

use crate::config::{RunConfig, ThresholdPolicy};
use crate::output::{write_report, InputStamp, RunClock};
use crate::records::read_jsonl_nonempty;
use crate::{lib_failure, Failure};

#[derive(Serialize)]
struct Body {
    report: AlignmentReport,
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;
    let threshold = match config.threshold_or_natural() {
        ThresholdPolicy::Fixed(threshold) => threshold,
        ThresholdPolicy::Sweep => {
            return Err(Failure::Usage("check-align takes a fixed --threshold, not --sweep".into()))
        }
    };

    let cases: Vec<AlignmentCase> = read_jsonl_nonempty(input)?;
    let stamp = InputStamp::new(input, cases.len())?;
    let report = check_alignment(&cases, threshold).map_err(lib_failure)?;

    let doc = super::ReportDoc {
        command: "check-align",
        input: stamp,
        parameters: serde_json::json!({ "threshold": threshold }),
        body: Body { report },
    };
    write_report(out, &doc)?;
    clock.write_sidecar(out, "check-align", doc.body.report.checked)?;
    println!(
        "checked {} cases: {} score gaps, {} alignment gaps",
        doc.body.report.checked, doc.body.report.score_gaps, doc.body.report.alignment_gaps
    );
    Ok(())
}
