//! Output-based LLM-judge baselines.
//!
//! These judges work the conventional way: build a prompt, sample a reply,
//! parse the JSON out of it. Replies from real models are messy, so parsing
//! applies a bounded, auditable repair list and nothing more: strip text
//! around the first JSON object, case-fold keys and enum values, coerce
//! numeric strings. Anything needing more help is `invalid`, kept out of
//! agreement statistics, and counted separately; coercing garbage to a
//! default answer would silently bias every downstream κ.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::backend::LogProbBackend;
use crate::error::{Error, Result};
use crate::templates::{judge_prompt, AnswerDomain, AnswerSchema, JudgePromptId};

/// Token budget for judge replies; the schemas above fit in a fraction.
pub const JUDGE_MAX_NEW_TOKENS: usize = 128;

/// Which judge family produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    YesNo,
    Choice,
    Likert,
}

/// Binary judge answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum YesNo {
    Yes,
    No,
}

/// Pairwise preference, the Choice judge's answer domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Preference {
    A,
    B,
    Tie,
}

impl Preference {
    /// The same preference with the candidates' positions exchanged.
    pub fn swapped(self) -> Self {
        match self {
            Preference::A => Preference::B,
            Preference::B => Preference::A,
            Preference::Tie => Preference::Tie,
        }
    }
}

/// A parsed judge answer. Serializes as the bare value ("Yes", "A", 4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JudgeValue {
    Likert(u8),
    YesNo(YesNo),
    Choice(Preference),
}

/// How much repair the reply needed. `Invalid` verdicts carry no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Invalid,
}

/// One judged item: the parsed value (absent iff invalid) plus the raw
/// reply for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub kind: JudgeKind,
    pub value: Option<JudgeValue>,
    pub parse_status: ParseStatus,
    pub raw: String,
}

impl JudgeVerdict {
    fn parsed(kind: JudgeKind, value: JudgeValue, repaired: bool, raw: &str) -> Self {
        JudgeVerdict {
            kind,
            value: Some(value),
            parse_status: if repaired { ParseStatus::Repaired } else { ParseStatus::Ok },
            raw: raw.to_string(),
        }
    }

    fn invalid(kind: JudgeKind, raw: &str) -> Self {
        JudgeVerdict {
            kind,
            value: None,
            parse_status: ParseStatus::Invalid,
            raw: raw.to_string(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.parse_status != ParseStatus::Invalid
    }
}

/// One line of judge batch output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub id: String,
    #[serde(flatten)]
    pub verdict: JudgeVerdict,
}

/// The three yes/no prompt variants of the judge prompt set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YesNoVariant {
    Paraphrase,
    ParaphraseFr,
    Nile,
}

impl YesNoVariant {
    pub fn prompt_id(self) -> JudgePromptId {
        match self {
            YesNoVariant::Paraphrase => JudgePromptId::YesNoParaphrase,
            YesNoVariant::ParaphraseFr => JudgePromptId::YesNoParaphraseFr,
            YesNoVariant::Nile => JudgePromptId::YesNoNile,
        }
    }
}

fn pair_bindings(id: JudgePromptId, first: &str, second: &str) -> BTreeMap<String, String> {
    let slots = &judge_prompt(id).placeholders;
    BTreeMap::from([
        (slots[0].clone(), first.to_string()),
        (slots[1].clone(), second.to_string()),
    ])
}

/// Asks a yes/no judge whether the pair matches. Backend failures are
/// errors; malformed replies are `invalid` verdicts, never errors.
pub fn judge_yesno(
    source: &str,
    hypothesis: &str,
    variant: YesNoVariant,
    backend: &dyn LogProbBackend,
) -> Result<JudgeVerdict> {
    let id = variant.prompt_id();
    let prompt = judge_prompt(id);
    let turns = prompt.build(&pair_bindings(id, source, hypothesis))?;
    let reply = backend.generate(&turns, JUDGE_MAX_NEW_TOKENS)?;
    Ok(parse_judge_reply(&reply.text, &prompt.answer_schema, JudgeKind::YesNo))
}

/// Asks the choice judge which of two candidates translates `context` best.
/// Candidate order is presented exactly as given; see
/// [`PositionAudit`] for measuring order sensitivity.
pub fn judge_choice(
    context: &str,
    candidate_a: &str,
    candidate_b: &str,
    backend: &dyn LogProbBackend,
) -> Result<JudgeVerdict> {
    let prompt = judge_prompt(JudgePromptId::Choice);
    let bindings = BTreeMap::from([
        (prompt.placeholders[0].clone(), context.to_string()),
        (prompt.placeholders[1].clone(), candidate_a.to_string()),
        (prompt.placeholders[2].clone(), candidate_b.to_string()),
    ]);
    let turns = prompt.build(&bindings)?;
    let reply = backend.generate(&turns, JUDGE_MAX_NEW_TOKENS)?;
    Ok(parse_judge_reply(&reply.text, &prompt.answer_schema, JudgeKind::Choice))
}

/// Asks the Likert judge to grade one candidate from 1 to 5.
pub fn judge_likert(
    context: &str,
    candidate: &str,
    backend: &dyn LogProbBackend,
) -> Result<JudgeVerdict> {
    let id = JudgePromptId::Likert;
    let prompt = judge_prompt(id);
    let turns = prompt.build(&pair_bindings(id, context, candidate))?;
    let reply = backend.generate(&turns, JUDGE_MAX_NEW_TOKENS)?;
    Ok(parse_judge_reply(&reply.text, &prompt.answer_schema, JudgeKind::Likert))
}

/// Turns two Likert grades into a pairwise preference.
pub fn likert_to_preference(grade_a: u8, grade_b: u8) -> Result<Preference> {
    for g in [grade_a, grade_b] {
        if !(1..=5).contains(&g) {
            return Err(Error::UnknownRating(format!("likert grade {g} outside 1..=5")));
        }
    }
    Ok(match grade_a.cmp(&grade_b) {
        std::cmp::Ordering::Greater => Preference::A,
        std::cmp::Ordering::Less => Preference::B,
        std::cmp::Ordering::Equal => Preference::Tie,
    })
}

/// Order-sensitivity audit for the choice judge: each item is judged twice,
/// once as (A, B) and once as (B, A), and the swapped verdict is remapped.
/// A judge that ignores presentation order is consistent on every item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PositionAudit {
    /// Items where both verdicts were valid.
    pub compared: usize,
    /// Compared items whose remapped verdicts agree.
    pub consistent: usize,
    /// Items dropped because at least one verdict was invalid.
    pub skipped: usize,
}

impl PositionAudit {
    pub fn record(&mut self, forward: &JudgeVerdict, swapped: &JudgeVerdict) {
        match (forward.value, swapped.value) {
            (Some(JudgeValue::Choice(f)), Some(JudgeValue::Choice(s))) => {
                self.compared += 1;
                if f == s.swapped() {
                    self.consistent += 1;
                }
            }
            _ => self.skipped += 1,
        }
    }

    /// Fraction of compared items that were order-consistent; `None` until
    /// something has been compared.
    pub fn rate(&self) -> Option<f64> {
        (self.compared > 0).then(|| self.consistent as f64 / self.compared as f64)
    }
}

/// Parses a judge reply against its schema. Total: every input maps to
/// exactly one verdict, and only the documented repairs are attempted.
pub fn parse_judge_reply(raw: &str, schema: &AnswerSchema, kind: JudgeKind) -> JudgeVerdict {
    let trimmed = raw.trim();
    let mut repaired = false;

    let object = match serde_json::from_str::<serde_json::Value>(trimmed) {
        Ok(serde_json::Value::Object(map)) => map,
        _ => {
            // Repair 1: first balanced JSON object inside surrounding prose.
            let Some(slice) = extract_first_json_object(trimmed) else {
                return JudgeVerdict::invalid(kind, raw);
            };
            match serde_json::from_str::<serde_json::Value>(slice) {
                Ok(serde_json::Value::Object(map)) => {
                    repaired = true;
                    map
                }
                _ => return JudgeVerdict::invalid(kind, raw),
            }
        }
    };

    let value = match object.get(&schema.key) {
        Some(v) => v,
        None => {
            // Repair 2: case-folded key match.
            let folded = schema.key.to_lowercase();
            match object.iter().find(|(k, _)| k.to_lowercase() == folded) {
                Some((_, v)) => {
                    repaired = true;
                    v
                }
                None => return JudgeVerdict::invalid(kind, raw),
            }
        }
    };

    let parsed = match (&schema.domain, kind) {
        (AnswerDomain::Enum { values }, JudgeKind::YesNo) => {
            parse_enum(value, values, &mut repaired).and_then(|ans| {
                match ans.to_lowercase().as_str() {
                    "yes" | "oui" => Some(JudgeValue::YesNo(YesNo::Yes)),
                    "no" | "non" => Some(JudgeValue::YesNo(YesNo::No)),
                    _ => None,
                }
            })
        }
        (AnswerDomain::Enum { values }, JudgeKind::Choice) => {
            parse_enum(value, values, &mut repaired).and_then(|ans| {
                match ans.to_lowercase().as_str() {
                    "a" => Some(JudgeValue::Choice(Preference::A)),
                    "b" => Some(JudgeValue::Choice(Preference::B)),
                    "tie" => Some(JudgeValue::Choice(Preference::Tie)),
                    _ => None,
                }
            })
        }
        (AnswerDomain::IntRange { min, max }, JudgeKind::Likert) => {
            parse_int(value, &mut repaired)
                .filter(|g| (*min..=*max).contains(g))
                .map(|g| JudgeValue::Likert(g as u8))
        }
        _ => None,
    };

    match parsed {
        Some(value) => JudgeVerdict::parsed(kind, value, repaired, raw),
        None => JudgeVerdict::invalid(kind, raw),
    }
}

/// Enum-domain string: exact schema value, or (repair 3) a case-insensitive
/// match. Returns the canonical casing when one matches.
fn parse_enum<'v>(
    value: &'v serde_json::Value,
    schema_values: &[String],
    repaired: &mut bool,
) -> Option<&'v str> {
    let s = value.as_str()?;
    if schema_values.iter().any(|v| v == s) {
        return Some(s);
    }
    *repaired = true;
    // Case-folded; the final mapping also accepts cross-language synonyms,
    // so values outside the schema list pass through for it to decide.
    Some(s)
}

/// Int-domain value: a JSON integer, or (repair 4) an integer in a string.
fn parse_int(value: &serde_json::Value, repaired: &mut bool) -> Option<i64> {
    if let Some(n) = value.as_i64() {
        return Some(n);
    }
    let s = value.as_str()?;
    let n = s.trim().parse::<i64>().ok()?;
    *repaired = true;
    Some(n)
}

/// First balanced `{…}` group outside string literals.
fn extract_first_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            '{' if !in_string => depth += 1,
            '}' if !in_string => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + c.len_utf8()]);
                }
            }
            _ => {}
        }
    }
    None
}
