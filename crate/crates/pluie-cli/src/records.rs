//! Record shapes the CLI reads and writes, and a line-oriented JSONL reader.
//!
//! Scored outputs carry the full provenance (texts, template, model) so a
//! downstream command never needs the original corpus; the readers here are
//! tolerant of extra fields for the same reason.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use pluie::judges::{JudgeVerdict, Preference};
use pluie::score::ScoredPair;

use crate::Failure;

/// A scored pair as written by `score`: the library record plus corpus id
/// and, when the input carried one, the human label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    #[serde(flatten)]
    pub pair: ScoredPair,
}

/// A lexically scored pair; no model or template is involved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexicalRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    pub source: String,
    pub hypothesis: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_reverse: Option<f64>,
    pub metric: String,
}

/// What `classify` and `sweep` need from a scored line; extra fields are
/// ignored so any scored output works.
#[derive(Debug, Clone, Deserialize)]
pub struct ScoredLine {
    pub id: String,
    pub score: f64,
    #[serde(default)]
    pub label: Option<bool>,
}

/// A judged pair: verdict plus the human label when the input carried one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgedPair {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<bool>,
    #[serde(flatten)]
    pub verdict: JudgeVerdict,
}

/// A judged A/B comparison, from the choice judge directly or derived from
/// two Likert grades. `predicted` is absent when parsing failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgedComparison {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<Preference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Preference>,
    pub parse_status: pluie::judges::ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_a: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_b: Option<u8>,
    pub raw: String,
}

/// Reads a JSONL file, skipping blank lines, reporting errors with their
/// 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| {
            Failure::Data(format!("{}: line {}: {e}", path.display(), idx + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Like [`read_jsonl`] but refuses an empty file, naming it.
pub fn read_jsonl_nonempty<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let records = read_jsonl(path)?;
    if records.is_empty() {
        return Err(Failure::Data(format!("{}: no records", path.display())));
    }
    Ok(records)
}
