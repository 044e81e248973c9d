//! Prompt templates as data.
//!
//! The scoring templates and the output-judge prompts ship as JSON files
//! embedded in the crate, one document per template. Templates are data on
//! purpose: adding a task-specific variant means writing a JSON file, not
//! code. Each file's sha256 is exposed so reports can pin exactly which
//! prompt produced a score.
//!
//! Placeholder syntax is `{name}`; literal braces are doubled (`{{`, `}}`).
//! Only names declared in the template's `placeholders` list are
//! substituted, so filled text containing braces (JSON schemas, for one)
//! passes through untouched on a second fill.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::backend::{ChatMessage, Role};
use crate::error::{Error, Result};

/// Scoring template identifiers.
///
/// `Rev` and `RevWithGold` share their dialogue; the latter inserts a
/// one-shot example showing the gold revision answered positively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    Para,
    Fr,
    Net,
    Rev,
    RevWithGold,
}

pub const ALL_TEMPLATES: [TemplateId; 5] = [
    TemplateId::Para,
    TemplateId::Fr,
    TemplateId::Net,
    TemplateId::Rev,
    TemplateId::RevWithGold,
];

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TemplateId::Para => "Para",
            TemplateId::Fr => "Fr",
            TemplateId::Net => "Net",
            TemplateId::Rev => "Rev",
            TemplateId::RevWithGold => "RevWithGold",
        };
        write!(f, "{name}")
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "para" => Ok(TemplateId::Para),
            "fr" => Ok(TemplateId::Fr),
            "net" => Ok(TemplateId::Net),
            "rev" => Ok(TemplateId::Rev),
            "rev_with_gold" | "revwithgold" => Ok(TemplateId::RevWithGold),
            _ => Err(Error::UnknownTemplate(s.to_string())),
        }
    }
}

/// Output-judge prompt identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JudgePromptId {
    YesNoParaphrase,
    YesNoParaphraseFr,
    YesNoNile,
    Choice,
    Likert,
}

pub const ALL_JUDGE_PROMPTS: [JudgePromptId; 5] = [
    JudgePromptId::YesNoParaphrase,
    JudgePromptId::YesNoParaphraseFr,
    JudgePromptId::YesNoNile,
    JudgePromptId::Choice,
    JudgePromptId::Likert,
];

impl fmt::Display for JudgePromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            JudgePromptId::YesNoParaphrase => "YesNoParaphrase",
            JudgePromptId::YesNoParaphraseFr => "YesNoParaphraseFr",
            JudgePromptId::YesNoNile => "YesNoNile",
            JudgePromptId::Choice => "Choice",
            JudgePromptId::Likert => "Likert",
        };
        write!(f, "{name}")
    }
}

impl FromStr for JudgePromptId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "yesno_paraphrase" | "yesnoparaphrase" => Ok(JudgePromptId::YesNoParaphrase),
            "yesno_paraphrase_fr" | "yesnoparaphrasefr" => Ok(JudgePromptId::YesNoParaphraseFr),
            "yesno_nile" | "yesnonile" => Ok(JudgePromptId::YesNoNile),
            "choice" => Ok(JudgePromptId::Choice),
            "likert" => Ok(JudgePromptId::Likert),
            _ => Err(Error::UnknownTemplate(s.to_string())),
        }
    }
}

/// A scoring dialogue with placeholders.
///
/// The final turn is always a user turn carrying the filled pair; the
/// scorer appends the assistant answer word itself. `placeholders` is
/// ordered: a two-slot template binds (source, hypothesis) to the first and
/// second entry respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub answer_pos: String,
    pub answer_neg: String,
    pub placeholders: Vec<String>,
    pub turns: Vec<ChatMessage>,
}

impl PromptTemplate {
    pub fn from_json(json: &str) -> Result<Self> {
        let t: PromptTemplate = serde_json::from_str(json)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.turns.is_empty() {
            return Err(Error::Template(format!("template {}: no turns", self.id)));
        }
        if self.turns.last().map(|t| t.role) != Some(Role::User) {
            return Err(Error::Template(format!(
                "template {}: final turn must be a user turn",
                self.id
            )));
        }
        if self.answer_pos.is_empty() || self.answer_neg.is_empty() {
            return Err(Error::Template(format!("template {}: empty answer word", self.id)));
        }
        if self.answer_pos == self.answer_neg {
            return Err(Error::Template(format!(
                "template {}: answer words must differ",
                self.id
            )));
        }
        let declared: BTreeSet<&str> = self.placeholders.iter().map(String::as_str).collect();
        if declared.len() != self.placeholders.len() {
            return Err(Error::Template(format!(
                "template {}: duplicate placeholder declaration",
                self.id
            )));
        }
        let mut seen = BTreeSet::new();
        for turn in &self.turns {
            scan_placeholders(&turn.content, &declared, &mut seen)
                .map_err(|e| Error::Template(format!("template {}: {e}", self.id)))?;
        }
        if seen.iter().map(String::as_str).collect::<BTreeSet<_>>() != declared {
            return Err(Error::Template(format!(
                "template {}: declared placeholders {declared:?} but turns use {seen:?}",
                self.id
            )));
        }
        Ok(())
    }

    /// Substitutes every placeholder; errors on a missing binding, an empty
    /// binding value, or (strict) a binding that matches no placeholder.
    pub fn fill(&self, bindings: &BTreeMap<String, String>) -> Result<Vec<ChatMessage>> {
        fill_turns(&self.turns, &self.placeholders, bindings, true)
    }

    /// Like [`fill`](Self::fill) but extra bindings are ignored.
    pub fn fill_lenient(&self, bindings: &BTreeMap<String, String>) -> Result<Vec<ChatMessage>> {
        fill_turns(&self.turns, &self.placeholders, bindings, false)
    }

    /// The (source, hypothesis) placeholder names, when the template takes
    /// exactly one pair.
    pub fn pair_slots(&self) -> Option<(&str, &str)> {
        match self.placeholders.as_slice() {
            [s, h] => Some((s, h)),
            _ => None,
        }
    }
}

/// Value domain an output-judge answer must inhabit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnswerDomain {
    Enum { values: Vec<String> },
    IntRange { min: i64, max: i64 },
}

/// Expected shape of a judge's JSON reply: one key, one value domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSchema {
    pub key: String,
    pub domain: AnswerDomain,
}

/// An output-judge prompt: fixed system turn plus a user template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgePrompt {
    pub id: JudgePromptId,
    pub placeholders: Vec<String>,
    pub system: String,
    pub user_template: String,
    pub answer_schema: AnswerSchema,
}

impl JudgePrompt {
    pub fn from_json(json: &str) -> Result<Self> {
        let p: JudgePrompt = serde_json::from_str(json)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let declared: BTreeSet<&str> = self.placeholders.iter().map(String::as_str).collect();
        if declared.len() != self.placeholders.len() {
            return Err(Error::Template(format!(
                "judge prompt {}: duplicate placeholder declaration",
                self.id
            )));
        }
        let mut seen = BTreeSet::new();
        scan_placeholders(&self.system, &BTreeSet::new(), &mut BTreeSet::new())
            .map_err(|e| Error::Template(format!("judge prompt {} system: {e}", self.id)))?;
        scan_placeholders(&self.user_template, &declared, &mut seen)
            .map_err(|e| Error::Template(format!("judge prompt {}: {e}", self.id)))?;
        if seen.iter().map(String::as_str).collect::<BTreeSet<_>>() != declared {
            return Err(Error::Template(format!(
                "judge prompt {}: declared placeholders {declared:?} but template uses {seen:?}",
                self.id
            )));
        }
        if self.answer_schema.key.is_empty() {
            return Err(Error::Template(format!("judge prompt {}: empty answer key", self.id)));
        }
        Ok(())
    }

    /// The `[system, user]` turns with placeholders substituted.
    pub fn build(&self, bindings: &BTreeMap<String, String>) -> Result<Vec<ChatMessage>> {
        check_bindings(&self.placeholders, bindings, true)?;
        let user = fill_text(&self.user_template, &self.placeholders, bindings)?;
        Ok(vec![ChatMessage::system(self.system.clone()), ChatMessage::user(user)])
    }
}

/// Convenience constructor for binding maps.
pub fn bindings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn get_template(id: TemplateId) -> &'static PromptTemplate {
    &registry().templates[id as usize].value
}

/// Raw-file sha256 of the template, hex-encoded.
pub fn template_sha256(id: TemplateId) -> &'static str {
    &registry().templates[id as usize].sha256
}

pub fn judge_prompt(id: JudgePromptId) -> &'static JudgePrompt {
    &registry().judges[id as usize].value
}

pub fn judge_sha256(id: JudgePromptId) -> &'static str {
    &registry().judges[id as usize].sha256
}

/// Builds the `[system, user]` turns for a judge prompt.
pub fn build_judge_prompt(
    id: JudgePromptId,
    bindings: &BTreeMap<String, String>,
) -> Result<Vec<ChatMessage>> {
    judge_prompt(id).build(bindings)
}

fn fill_turns(
    turns: &[ChatMessage],
    placeholders: &[String],
    bindings: &BTreeMap<String, String>,
    strict: bool,
) -> Result<Vec<ChatMessage>> {
    check_bindings(placeholders, bindings, strict)?;
    turns
        .iter()
        .map(|turn| {
            Ok(ChatMessage {
                role: turn.role,
                content: fill_text(&turn.content, placeholders, bindings)?,
            })
        })
        .collect()
}

fn check_bindings(
    placeholders: &[String],
    bindings: &BTreeMap<String, String>,
    strict: bool,
) -> Result<()> {
    for (name, value) in bindings {
        if value.is_empty() {
            return Err(Error::Template(format!("binding {name:?} is empty")));
        }
        if strict && !placeholders.iter().any(|p| p == name) {
            return Err(Error::UnusedBinding(name.clone()));
        }
    }
    Ok(())
}

/// Substitutes declared `{name}` placeholders and unescapes doubled braces.
/// Braces that form neither are literal, which makes the operation a no-op
/// on its own output.
fn fill_text(
    text: &str,
    placeholders: &[String],
    bindings: &BTreeMap<String, String>,
) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(at) = rest.find(['{', '}']) {
        out.push_str(&rest[..at]);
        rest = &rest[at..];
        if let Some(tail) = rest.strip_prefix("{{") {
            out.push('{');
            rest = tail;
        } else if let Some(tail) = rest.strip_prefix("}}") {
            out.push('}');
            rest = tail;
        } else if rest.starts_with('{') {
            let group_end = rest.find('}');
            let name = group_end.map(|e| &rest[1..e]);
            match name {
                Some(name) if placeholders.iter().any(|p| p == name) => {
                    let value = bindings
                        .get(name)
                        .ok_or_else(|| Error::MissingBinding(name.to_string()))?;
                    out.push_str(value);
                    rest = &rest[group_end.unwrap() + 1..];
                }
                _ => {
                    out.push('{');
                    rest = &rest[1..];
                }
            }
        } else {
            out.push('}');
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Validation-time scan: every single brace must form a doubled escape or a
/// declared placeholder, so data-file typos fail at load rather than at
/// scoring time.
fn scan_placeholders(
    text: &str,
    declared: &BTreeSet<&str>,
    seen: &mut BTreeSet<String>,
) -> std::result::Result<(), String> {
    let mut rest = text;
    while let Some(at) = rest.find(['{', '}']) {
        rest = &rest[at..];
        if let Some(tail) = rest.strip_prefix("{{").or_else(|| rest.strip_prefix("}}")) {
            rest = tail;
        } else if rest.starts_with('{') {
            let end = rest.find('}').ok_or_else(|| "unclosed '{'".to_string())?;
            let name = &rest[1..end];
            if !declared.contains(name) {
                return Err(format!("undeclared placeholder {name:?}"));
            }
            seen.insert(name.to_string());
            rest = &rest[end + 1..];
        } else {
            return Err("stray '}'".to_string());
        }
    }
    Ok(())
}

struct Loaded<T> {
    value: T,
    sha256: String,
}

struct Registry {
    templates: Vec<Loaded<PromptTemplate>>,
    judges: Vec<Loaded<JudgePrompt>>,
}

fn sha256_hex(data: &str) -> String {
    let digest = Sha256::digest(data.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let template_sources = [
            include_str!("../data/templates/para.json"),
            include_str!("../data/templates/fr.json"),
            include_str!("../data/templates/net.json"),
            include_str!("../data/templates/rev.json"),
            include_str!("../data/templates/rev_with_gold.json"),
        ];
        let judge_sources = [
            include_str!("../data/judges/yesno_paraphrase.json"),
            include_str!("../data/judges/yesno_paraphrase_fr.json"),
            include_str!("../data/judges/yesno_nile.json"),
            include_str!("../data/judges/choice.json"),
            include_str!("../data/judges/likert.json"),
        ];
        let templates: Vec<Loaded<PromptTemplate>> = ALL_TEMPLATES
            .iter()
            .zip(template_sources)
            .map(|(id, src)| {
                let value = PromptTemplate::from_json(src)
                    .unwrap_or_else(|e| panic!("embedded template {id}: {e}"));
                assert_eq!(value.id, *id, "embedded template file order");
                Loaded { value, sha256: sha256_hex(src) }
            })
            .collect();
        let judges: Vec<Loaded<JudgePrompt>> = ALL_JUDGE_PROMPTS
            .iter()
            .zip(judge_sources)
            .map(|(id, src)| {
                let value = JudgePrompt::from_json(src)
                    .unwrap_or_else(|e| panic!("embedded judge prompt {id}: {e}"));
                assert_eq!(value.id, *id, "embedded judge prompt file order");
                Loaded { value, sha256: sha256_hex(src) }
            })
            .collect();
        Registry { templates, judges }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_embedded_template_loads() {
        for id in ALL_TEMPLATES {
            let t = get_template(id);
            assert_eq!(t.id, id);
            assert_eq!(t.turns.last().unwrap().role, Role::User);
        }
        for id in ALL_JUDGE_PROMPTS {
            assert_eq!(judge_prompt(id).id, id);
        }
    }

    #[test]
    fn fr_answers_are_oui_non() {
        let t = get_template(TemplateId::Fr);
        assert_eq!(t.answer_pos, "oui");
        assert_eq!(t.answer_neg, "non");
    }

    #[test]
    fn rev_with_gold_adds_one_shot_answered_yes() {
        let rev = get_template(TemplateId::Rev);
        let gold = get_template(TemplateId::RevWithGold);
        assert_eq!(rev.turns.len() + 2, gold.turns.len());
        assert!(gold.turns[2].content.contains("{gold}"));
        assert_eq!(gold.turns[3].role, Role::Assistant);
        assert_eq!(gold.turns[3].content, "Yes");
        assert!(!rev.turns.iter().any(|t| t.content.contains("{gold}")));
        assert_eq!(gold.placeholders, ["reference", "instruction", "gold", "hypothese"]);
    }

    #[test]
    fn unknown_template_name_errors() {
        let err = "paraphrase9000".parse::<TemplateId>();
        assert!(matches!(err, Err(Error::UnknownTemplate(_))));
        assert_eq!("rev-with-gold".parse::<TemplateId>().unwrap(), TemplateId::RevWithGold);
        assert_eq!("PARA".parse::<TemplateId>().unwrap(), TemplateId::Para);
    }

    #[test]
    fn fill_net_substitutes_the_pair() {
        let t = get_template(TemplateId::Net);
        let turns = t.fill(&bindings(&[("source", "X"), ("translation", "Y")])).unwrap();
        assert_eq!(turns.last().unwrap().content, r#"A: "X"; B: "Y""#);
        assert_eq!(turns.len(), t.turns.len());
    }

    #[test]
    fn fill_reports_missing_binding_by_name() {
        let t = get_template(TemplateId::Net);
        let err = t.fill(&bindings(&[("source", "X")]));
        match err {
            Err(Error::MissingBinding(name)) => assert_eq!(name, "translation"),
            other => panic!("expected missing binding, got {other:?}"),
        }
    }

    #[test]
    fn strict_fill_rejects_extra_bindings() {
        let t = get_template(TemplateId::Net);
        let b = bindings(&[("source", "X"), ("translation", "Y"), ("gold", "Z")]);
        assert!(matches!(t.fill(&b), Err(Error::UnusedBinding(name)) if name == "gold"));
        assert!(t.fill_lenient(&b).is_ok());
    }

    #[test]
    fn fill_rejects_empty_binding_values() {
        let t = get_template(TemplateId::Net);
        let err = t.fill(&bindings(&[("source", ""), ("translation", "Y")]));
        assert!(matches!(err, Err(Error::Template(_))));
    }

    #[test]
    fn fill_is_idempotent_on_its_output() {
        let t = get_template(TemplateId::Fr);
        let b = bindings(&[("source", "Il pleut."), ("paraphrase", "Il tombe de la pluie.")]);
        let filled = t.fill(&b).unwrap();
        let refill = PromptTemplate {
            id: t.id,
            answer_pos: t.answer_pos.clone(),
            answer_neg: t.answer_neg.clone(),
            placeholders: vec![],
            turns: filled.clone(),
        };
        assert_eq!(refill.fill(&BTreeMap::new()).unwrap(), filled);
    }

    #[test]
    fn doubled_braces_unescape_once() {
        let p = judge_prompt(JudgePromptId::YesNoNile);
        let turns = p.build(&bindings(&[("nile", "N"), ("translation", "T")])).unwrap();
        let user = &turns[1].content;
        assert!(user.ends_with(r#"{"answer": str }"#));
        assert!(!user.contains("{{"));
        assert!(user.contains(r#"[Sentence A]: "N""#));
    }

    #[test]
    fn judge_prompts_match_their_tasks() {
        let nile = build_judge_prompt(
            JudgePromptId::YesNoNile,
            &bindings(&[("nile", "N"), ("translation", "T")]),
        )
        .unwrap();
        assert_eq!(nile[0].role, Role::System);
        assert_eq!(nile[1].role, Role::User);
        assert!(nile[1]
            .content
            .contains("Do these two sentences express the same network policy?"));

        let choice = build_judge_prompt(
            JudgePromptId::Choice,
            &bindings(&[("nile", "N"), ("translation_1", "T1"), ("translation_2", "T2")]),
        )
        .unwrap();
        assert!(choice[1].content.contains("Which sentence is the best translation"));

        let likert = build_judge_prompt(
            JudgePromptId::Likert,
            &bindings(&[("nile", "N"), ("translation", "T")]),
        )
        .unwrap();
        assert!(likert[1].content.contains("The model proposed a correct translation"));
    }

    #[test]
    fn answer_schemas_pin_key_and_domain() {
        let yn = &judge_prompt(JudgePromptId::YesNoParaphrase).answer_schema;
        assert_eq!(yn.key, "answer");
        assert_eq!(
            yn.domain,
            AnswerDomain::Enum { values: vec!["Yes".into(), "No".into()] }
        );

        let fr = &judge_prompt(JudgePromptId::YesNoParaphraseFr).answer_schema;
        assert_eq!(fr.key, "réponse");

        let choice = &judge_prompt(JudgePromptId::Choice).answer_schema;
        assert_eq!(choice.key, "best_translation");
        assert_eq!(
            choice.domain,
            AnswerDomain::Enum { values: vec!["A".into(), "B".into(), "Tie".into()] }
        );

        let likert = &judge_prompt(JudgePromptId::Likert).answer_schema;
        assert_eq!(likert.key, "translation_quality");
        assert_eq!(likert.domain, AnswerDomain::IntRange { min: 1, max: 5 });
    }

    #[test]
    fn checksums_are_hex_and_stable() {
        for id in ALL_TEMPLATES {
            let sum = template_sha256(id);
            assert_eq!(sum.len(), 64);
            assert!(sum.bytes().all(|b| b.is_ascii_hexdigit()));
            assert_eq!(sum, template_sha256(id));
        }
        for id in ALL_JUDGE_PROMPTS {
            assert_eq!(judge_sha256(id).len(), 64);
        }
    }

    #[test]
    fn validate_rejects_undeclared_placeholder() {
        let json = r#"{
            "id": "Net",
            "answer_pos": "Yes",
            "answer_neg": "No",
            "placeholders": ["source"],
            "turns": [{"role": "user", "content": "A: {source}; B: {translation}"}]
        }"#;
        assert!(matches!(PromptTemplate::from_json(json), Err(Error::Template(_))));
    }

    #[test]
    fn validate_rejects_stray_braces() {
        let json = r#"{
            "id": "Net",
            "answer_pos": "Yes",
            "answer_neg": "No",
            "placeholders": ["source", "translation"],
            "turns": [{"role": "user", "content": "A: {source}; B: {translation} }"}]
        }"#;
        assert!(matches!(PromptTemplate::from_json(json), Err(Error::Template(_))));
    }

    #[test]
    fn validate_requires_user_final_turn() {
        let json = r#"{
            "id": "Net",
            "answer_pos": "Yes",
            "answer_neg": "No",
            "placeholders": [],
            "turns": [{"role": "assistant", "content": "Yes"}]
        }"#;
        assert!(matches!(PromptTemplate::from_json(json), Err(Error::Template(_))));
    }

    #[test]
    fn pair_slots_only_for_two_placeholder_templates() {
        assert_eq!(get_template(TemplateId::Net).pair_slots(), Some(("source", "translation")));
        assert_eq!(get_template(TemplateId::Rev).pair_slots(), None);
    }
}
