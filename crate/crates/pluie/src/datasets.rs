//! Typed loaders for the three task datasets, plus the rule-based French
//! paraphrase pair builder.
//!
//! Interchange is JSONL throughout: one record per line, UTF-8, blank lines
//! ignored. Loaders validate schema and id uniqueness up front and report
//! the offending line, so a bad corpus fails at load time rather than as a
//! confusing mid-run scoring error.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::judges::Preference;
use crate::stats::{binarize_mushra, MushraRating};

/// One scoring pair, optionally labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub source: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

/// A source sentence with its lexical transformations: paronym (P),
/// synonym (S), and synonym-of-paronym (SP). Variants may be absent, and
/// nothing forbids a variant colliding with another text; the pair builder
/// flags collisions instead of rejecting them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub id: String,
    pub s: String,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub paronym: Option<String>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub synonym: Option<String>,
    #[serde(rename = "SP", default, skip_serializing_if = "Option::is_none")]
    pub synonym_of_paronym: Option<String>,
}

/// A human rating of one translation: either already binary, or a MUSHRA
/// grade binarized at the standard cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TranslationRating {
    Binary(bool),
    Mushra(MushraRating),
}

impl TranslationRating {
    pub fn is_positive(self) -> bool {
        match self {
            TranslationRating::Binary(b) => b,
            TranslationRating::Mushra(m) => binarize_mushra(m),
        }
    }
}

/// One rated candidate translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedTranslation {
    pub text: String,
    pub rating: TranslationRating,
}

/// A formal expression with exactly two rated candidate translations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NileTriplet {
    pub id: String,
    pub intent: String,
    pub translations: Vec<RatedTranslation>,
}

impl NileTriplet {
    pub fn translation_a(&self) -> &RatedTranslation {
        &self.translations[0]
    }

    pub fn translation_b(&self) -> &RatedTranslation {
        &self.translations[1]
    }
}

/// A paragraph revision comparison: the original, the revision
/// instruction, two candidate revisions, an optional gold revision, and
/// the human preference between the candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub id: String,
    pub original: String,
    pub instruction: String,
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    pub human: Preference,
}

/// The six pairing rules, in emission order. The first member of each name
/// is the pair's source text, the second its hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairRule {
    SourceVsSynonym,
    ParonymVsSynonymOfParonym,
    SourceVsParonym,
    SourceVsSynonymOfParonym,
    ParonymVsSynonym,
    SynonymVsSynonymOfParonym,
}

impl PairRule {
    /// Short code used to suffix emitted pair ids.
    pub fn code(self) -> &'static str {
        match self {
            PairRule::SourceVsSynonym => "s-S",
            PairRule::ParonymVsSynonymOfParonym => "P-SP",
            PairRule::SourceVsParonym => "s-P",
            PairRule::SourceVsSynonymOfParonym => "s-SP",
            PairRule::ParonymVsSynonym => "P-S",
            PairRule::SynonymVsSynonymOfParonym => "S-SP",
        }
    }

    /// Whether the rule labels its pair a paraphrase.
    pub fn label(self) -> bool {
        matches!(self, PairRule::SourceVsSynonym | PairRule::ParonymVsSynonymOfParonym)
    }
}

/// One emitted pair with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrenchPair {
    pub id: String,
    pub rule: PairRule,
    pub source: String,
    pub hypothesis: String,
    pub label: bool,
    /// The two texts are identical; emitted anyway so the positive rate is
    /// not silently shifted, but worth a warning upstream.
    pub collided: bool,
}

impl From<FrenchPair> for PairRecord {
    fn from(pair: FrenchPair) -> PairRecord {
        PairRecord {
            id: pair.id,
            source: pair.source,
            hypothesis: pair.hypothesis,
            label: Some(pair.label),
        }
    }
}

/// Expands one transform record into labeled pairs, in fixed rule order.
/// Rules whose members are absent are skipped, so a complete record yields
/// six pairs (two positive) and partial records proportionally fewer.
pub fn build_french_pairs(record: &TransformRecord) -> Vec<FrenchPair> {
    use PairRule::*;
    let s = Some(&record.s);
    let rules: [(PairRule, Option<&String>, Option<&String>); 6] = [
        (SourceVsSynonym, s, record.synonym.as_ref()),
        (ParonymVsSynonymOfParonym, record.paronym.as_ref(), record.synonym_of_paronym.as_ref()),
        (SourceVsParonym, s, record.paronym.as_ref()),
        (SourceVsSynonymOfParonym, s, record.synonym_of_paronym.as_ref()),
        (ParonymVsSynonym, record.paronym.as_ref(), record.synonym.as_ref()),
        (SynonymVsSynonymOfParonym, record.synonym.as_ref(), record.synonym_of_paronym.as_ref()),
    ];
    rules
        .into_iter()
        .filter_map(|(rule, source, hypothesis)| {
            let (source, hypothesis) = (source?, hypothesis?);
            Some(FrenchPair {
                id: format!("{}:{}", record.id, rule.code()),
                rule,
                source: source.clone(),
                hypothesis: hypothesis.clone(),
                label: rule.label(),
                collided: source == hypothesis,
            })
        })
        .collect()
}

/// Loads labeled or unlabeled scoring pairs.
pub fn load_pairs(path: &Path) -> Result<Vec<PairRecord>> {
    load_jsonl(path, |r: &PairRecord| {
        require(!r.id.is_empty(), "id")?;
        require(!r.source.is_empty(), "source")?;
        require(!r.hypothesis.is_empty(), "hypothesis")
    })
}

/// Loads transform records for the pair builder.
pub fn load_transforms(path: &Path) -> Result<Vec<TransformRecord>> {
    load_jsonl(path, |r: &TransformRecord| {
        require(!r.id.is_empty(), "id")?;
        require(!r.s.is_empty(), "s")
    })
}

/// Loads intent/translation triplets.
pub fn load_triplets(path: &Path) -> Result<Vec<NileTriplet>> {
    load_jsonl(path, |r: &NileTriplet| {
        require(!r.id.is_empty(), "id")?;
        require(!r.intent.is_empty(), "intent")?;
        if r.translations.len() != 2 {
            return Err(format!(
                "field `translations` must hold exactly 2 entries, got {}",
                r.translations.len()
            ));
        }
        Ok(())
    })
}

/// Loads revision comparison records.
pub fn load_revisions(path: &Path) -> Result<Vec<RevisionRecord>> {
    load_jsonl(path, |r: &RevisionRecord| {
        require(!r.id.is_empty(), "id")?;
        require(!r.instruction.is_empty(), "instruction")
    })
}

fn require(ok: bool, field: &str) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("field `{field}` must be non-empty"))
    }
}

trait HasId {
    fn record_id(&self) -> &str;
}

impl HasId for PairRecord {
    fn record_id(&self) -> &str {
        &self.id
    }
}

impl HasId for TransformRecord {
    fn record_id(&self) -> &str {
        &self.id
    }
}

impl HasId for NileTriplet {
    fn record_id(&self) -> &str {
        &self.id
    }
}

impl HasId for RevisionRecord {
    fn record_id(&self) -> &str {
        &self.id
    }
}

fn load_jsonl<T, F>(path: &Path, validate: F) -> Result<Vec<T>>
where
    T: DeserializeOwned + HasId,
    F: Fn(&T) -> std::result::Result<(), String>,
{
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let number = index + 1;
        let record: T = serde_json::from_str(line)
            .map_err(|e| Error::DataAtLine { line: number, message: e.to_string() })?;
        validate(&record).map_err(|message| Error::DataAtLine { line: number, message })?;
        if !seen.insert(record.record_id().to_string()) {
            return Err(Error::DuplicateId(record.record_id().to_string()));
        }
        records.push(record);
    }
    Ok(records)
}
