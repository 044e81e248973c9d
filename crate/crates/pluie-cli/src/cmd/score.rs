//! Batch scoring: log-odds, lexical baselines, or output judges.
//!
//! All scoring happens before anything is written, so a failed run leaves
//! no output file at all. Record order in the output always matches the
//! input, whatever the parallelism.

use std::collections::BTreeMap;
use std::path::Path;

use pluie::datasets::{
    load_pairs, load_revisions, load_triplets, NileTriplet, TranslationRating,
};
use pluie::judges::{
    judge_choice, judge_likert, judge_yesno, JudgeKind, JudgeValue, ParseStatus, Preference,
    YesNoVariant,
};
use pluie::lexical::LexicalMetric;
use pluie::score::{pluie_score_bound, score_pair};
use pluie::stats::PreferenceRecord;
use pluie::templates::{get_template, PromptTemplate, TemplateId};

use crate::cmd::{build_backend, parallel_map};
use crate::config::{Metric, RunConfig, Task};
use crate::output::{write_jsonl, RunClock};
use crate::records::{JudgedComparison, JudgedPair, LexicalRecord, ScoredRecord};
use crate::{lib_failure, Failure};

/// One (source, hypothesis) item to score; nile triplets flatten into two.
struct Item {
    id: String,
    label: Option<bool>,
    source: String,
    hypothesis: String,
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;

    let written = match (config.judge, config.metric) {
        (Some(kind), _) => run_judge(config, kind, input, out)?,
        (None, Metric::Pluie) => run_pluie(config, input, out)?,
        (None, Metric::Lexical(metric)) => run_lexical(config, metric, input, out)?,
    };

    clock.write_sidecar(out, "score", written)?;
    println!("scored {written} records in {} ms", clock.wall_ms());
    Ok(())
}

fn load_items(config: &RunConfig, input: &Path) -> Result<Vec<Item>, Failure> {
    match config.task {
        Task::Para => {
            let pairs = load_pairs(input).map_err(lib_failure)?;
            Ok(pairs
                .into_iter()
                .map(|p| Item {
                    id: p.id,
                    label: p.label,
                    source: p.source,
                    hypothesis: p.hypothesis,
                })
                .collect())
        }
        Task::Nile => {
            let triplets = load_triplets(input).map_err(lib_failure)?;
            let mut items = Vec::with_capacity(triplets.len() * 2);
            for t in &triplets {
                for (suffix, translation) in
                    [("a", t.translation_a()), ("b", t.translation_b())]
                {
                    items.push(Item {
                        id: format!("{}:{suffix}", t.id),
                        label: Some(translation.rating.is_positive()),
                        source: t.intent.clone(),
                        hypothesis: translation.text.clone(),
                    });
                }
            }
            Ok(items)
        }
        Task::Rev => Err(Failure::Usage(
            "--task rev scores candidate pairs; it needs the pluie metric without --judge".into(),
        )),
    }
}

fn run_pluie(config: &RunConfig, input: &Path, out: &Path) -> Result<usize, Failure> {
    if matches!(config.task, Task::Rev) {
        return run_pluie_revisions(config, input, out);
    }
    let items = load_items(config, input)?;
    let template = get_template(config.template_for_task()?);
    if template.pair_slots().is_none() {
        return Err(Failure::Usage(format!(
            "template {} does not take a (source, hypothesis) pair",
            template.id
        )));
    }
    let backend = build_backend(config)?;
    let records = parallel_map(&items, config.parallel, |item| {
        let pair = score_pair(
            &item.source,
            &item.hypothesis,
            template,
            backend.as_ref(),
            config.reverse,
        )
        .map_err(lib_failure)?;
        Ok(ScoredRecord { id: item.id.clone(), label: item.label, pair })
    })?;
    write_jsonl(out, &records)?;
    Ok(records.len())
}

/// Binds a revision template positionally: the first two placeholders take
/// the original and the instruction, the last the candidate, and a four-slot
/// template takes the gold revision in between.
fn revision_bindings(
    template: &PromptTemplate,
    original: &str,
    instruction: &str,
    gold: Option<&str>,
    candidate: &str,
) -> Result<BTreeMap<String, String>, Failure> {
    let slots = &template.placeholders;
    let mut bindings = BTreeMap::new();
    bindings.insert(slots[0].clone(), original.to_string());
    bindings.insert(slots[1].clone(), instruction.to_string());
    match (slots.len(), gold) {
        (3, _) => {}
        (4, Some(gold)) => {
            bindings.insert(slots[2].clone(), gold.to_string());
        }
        (4, None) => {
            return Err(Failure::Data("record lacks the gold revision".into()));
        }
        (n, _) => {
            return Err(Failure::Usage(format!(
                "template {} takes {n} placeholders; expected a revision template",
                template.id
            )));
        }
    }
    bindings.insert(slots[slots.len() - 1].clone(), candidate.to_string());
    Ok(bindings)
}

fn run_pluie_revisions(config: &RunConfig, input: &Path, out: &Path) -> Result<usize, Failure> {
    if config.reverse {
        return Err(Failure::Usage(
            "--reverse does not apply to revision scoring; both candidates are scored".into(),
        ));
    }
    let revisions = load_revisions(input).map_err(lib_failure)?;
    let template = get_template(config.template_for_task()?);
    let needs_gold = matches!(template.id, TemplateId::RevWithGold);
    if needs_gold {
        for r in &revisions {
            if r.gold.is_none() {
                return Err(Failure::Data(format!(
                    "record {:?} lacks the gold revision required by --gold",
                    r.id
                )));
            }
        }
    }
    let backend = build_backend(config)?;
    let records = parallel_map(&revisions, config.parallel, |r| {
        let gold = if needs_gold { r.gold.as_deref() } else { None };
        let score_candidate = |candidate: &str| -> Result<f64, Failure> {
            let bindings =
                revision_bindings(template, &r.original, &r.instruction, gold, candidate)
                    .map_err(|f| f.for_record(&r.id))?;
            pluie_score_bound(template, &bindings, backend.as_ref()).map_err(lib_failure)
        };
        Ok(PreferenceRecord {
            id: r.id.clone(),
            score_a: score_candidate(&r.a)?,
            score_b: score_candidate(&r.b)?,
            human: r.human,
        })
    })?;
    write_jsonl(out, &records)?;
    Ok(records.len())
}

fn run_lexical(
    config: &RunConfig,
    metric: LexicalMetric,
    input: &Path,
    out: &Path,
) -> Result<usize, Failure> {
    if matches!(config.task, Task::Rev) {
        return run_lexical_revisions(config, metric, input, out);
    }
    let items = load_items(config, input)?;
    let records: Vec<LexicalRecord> = items
        .into_iter()
        .map(|item| {
            let score = metric.score(&item.hypothesis, &item.source);
            let score_reverse =
                config.reverse.then(|| metric.score(&item.source, &item.hypothesis));
            LexicalRecord {
                id: item.id,
                label: item.label,
                source: item.source,
                hypothesis: item.hypothesis,
                score,
                score_reverse,
                metric: metric.name().to_string(),
            }
        })
        .collect();
    write_jsonl(out, &records)?;
    Ok(records.len())
}

/// Lexical candidate ranking for revisions: each candidate is compared to
/// the gold revision, so the input must carry one.
fn run_lexical_revisions(
    _config: &RunConfig,
    metric: LexicalMetric,
    input: &Path,
    out: &Path,
) -> Result<usize, Failure> {
    let revisions = load_revisions(input).map_err(lib_failure)?;
    let mut records = Vec::with_capacity(revisions.len());
    for r in &revisions {
        let Some(gold) = r.gold.as_deref() else {
            return Err(Failure::Data(format!(
                "record {:?} has no gold revision; lexical metrics need one to compare against",
                r.id
            )));
        };
        records.push(PreferenceRecord {
            id: r.id.clone(),
            score_a: metric.score(&r.a, gold),
            score_b: metric.score(&r.b, gold),
            human: r.human,
        });
    }
    write_jsonl(out, &records)?;
    Ok(records.len())
}

fn run_judge(
    config: &RunConfig,
    kind: JudgeKind,
    input: &Path,
    out: &Path,
) -> Result<usize, Failure> {
    if config.reverse {
        return Err(Failure::Usage("--reverse does not apply to --judge".into()));
    }
    match kind {
        JudgeKind::YesNo => run_judge_yesno(config, input, out),
        JudgeKind::Choice | JudgeKind::Likert => {
            if !matches!(config.task, Task::Nile) {
                return Err(Failure::Usage(
                    "--judge choice/likert compares two candidates; it requires --task nile"
                        .into(),
                ));
            }
            run_judge_comparison(config, kind, input, out)
        }
    }
}

fn run_judge_yesno(config: &RunConfig, input: &Path, out: &Path) -> Result<usize, Failure> {
    let variant = match (config.task, config.template) {
        (Task::Nile, _) => YesNoVariant::Nile,
        (_, Some(TemplateId::Fr)) => YesNoVariant::ParaphraseFr,
        _ => YesNoVariant::Paraphrase,
    };
    let items = load_items(config, input)?;
    let backend = build_backend(config)?;
    let records = parallel_map(&items, config.parallel, |item| {
        let verdict = judge_yesno(&item.source, &item.hypothesis, variant, backend.as_ref())
            .map_err(lib_failure)?;
        Ok(JudgedPair { id: item.id.clone(), human: item.label, verdict })
    })?;
    write_jsonl(out, &records)?;
    Ok(records.len())
}

/// The human preference implied by a triplet's two ratings.
fn human_preference(triplet: &NileTriplet) -> Result<Preference, Failure> {
    use std::cmp::Ordering;
    let a = triplet.translation_a().rating;
    let b = triplet.translation_b().rating;
    let ordering = match (a, b) {
        (TranslationRating::Binary(a), TranslationRating::Binary(b)) => a.cmp(&b),
        (TranslationRating::Mushra(a), TranslationRating::Mushra(b)) => a.cmp(&b),
        _ => {
            return Err(Failure::Data(format!(
                "triplet {:?} mixes binary and MUSHRA ratings",
                triplet.id
            )))
        }
    };
    Ok(match ordering {
        Ordering::Greater => Preference::A,
        Ordering::Less => Preference::B,
        Ordering::Equal => Preference::Tie,
    })
}

fn worst_status(a: ParseStatus, b: ParseStatus) -> ParseStatus {
    use ParseStatus::*;
    match (a, b) {
        (Invalid, _) | (_, Invalid) => Invalid,
        (Repaired, _) | (_, Repaired) => Repaired,
        _ => Ok,
    }
}

fn run_judge_comparison(
    config: &RunConfig,
    kind: JudgeKind,
    input: &Path,
    out: &Path,
) -> Result<usize, Failure> {
    let triplets = load_triplets(input).map_err(lib_failure)?;
    let backend = build_backend(config)?;
    let records = parallel_map(&triplets, config.parallel, |t| {
        let human = Some(human_preference(t)?);
        match kind {
            JudgeKind::Choice => {
                let verdict = judge_choice(
                    &t.intent,
                    &t.translation_a().text,
                    &t.translation_b().text,
                    backend.as_ref(),
                )
                .map_err(lib_failure)?;
                let predicted = match verdict.value {
                    Some(JudgeValue::Choice(p)) => Some(p),
                    _ => None,
                };
                Ok(JudgedComparison {
                    id: t.id.clone(),
                    human,
                    predicted,
                    parse_status: verdict.parse_status,
                    grade_a: None,
                    grade_b: None,
                    raw: verdict.raw,
                })
            }
            JudgeKind::Likert => {
                let judge_one = |text: &str| {
                    judge_likert(&t.intent, text, backend.as_ref()).map_err(lib_failure)
                };
                let verdict_a = judge_one(&t.translation_a().text)?;
                let verdict_b = judge_one(&t.translation_b().text)?;
                let grade = |v: &pluie::judges::JudgeVerdict| match v.value {
                    Some(JudgeValue::Likert(g)) => Some(g),
                    _ => None,
                };
                let (grade_a, grade_b) = (grade(&verdict_a), grade(&verdict_b));
                let predicted = match (grade_a, grade_b) {
                    (Some(a), Some(b)) => {
                        Some(pluie::judges::likert_to_preference(a, b).map_err(lib_failure)?)
                    }
                    _ => None,
                };
                Ok(JudgedComparison {
                    id: t.id.clone(),
                    human,
                    predicted,
                    parse_status: worst_status(verdict_a.parse_status, verdict_b.parse_status),
                    grade_a,
                    grade_b,
                    raw: format!("A: {}\nB: {}", verdict_a.raw, verdict_b.raw),
                })
            }
            JudgeKind::YesNo => unreachable!("routed to run_judge_yesno"),
        }
    })?;
    write_jsonl(out, &records)?;
    Ok(records.len())
}
