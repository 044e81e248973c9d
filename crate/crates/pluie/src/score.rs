//! The log-odds score at the heart of the crate.
//!
//! A pair (source, hypothesis) is scored by filling a template into a
//! dialogue that ends with a user turn asking a yes/no question about the
//! pair, rendering it with the assistant's closing marker stripped, and
//! comparing the log-probability of the positive answer token against the
//! negative one at the next position:
//!
//! ```text
//! score = log p(answer_pos | prompt) − log p(answer_neg | prompt)
//! ```
//!
//! Working in log space directly is numerically identical to the
//! perplexity-ratio formulation, (T+1)·[loss(prompt∘neg) − loss(prompt∘pos)]
//! with T the stripped-prompt token count: the prompt-token terms cancel,
//! leaving the answer-position log-odds. Positive scores favour the positive
//! answer; the score is not symmetric in (source, hypothesis), and no length
//! normalization is applied anywhere.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::backend::{ChatMessage, LogProbBackend, RenderedPrompt, TokenId};
use crate::error::{Error, Result};
use crate::templates::{PromptTemplate, TemplateId};

/// One scored (source, hypothesis) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub source: String,
    pub hypothesis: String,
    /// Log-odds of the positive answer, natural log. Always finite.
    pub score: f64,
    /// Score of the swapped pair, when bidirectional scoring was requested.
    pub score_reverse: Option<f64>,
    pub template: TemplateId,
    pub model: String,
}

/// An answer word resolved to a single vocabulary token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerToken {
    pub token: TokenId,
    /// The probed surface form, either `word` or ` word`.
    pub text: String,
}

/// Resolves an answer word to one token, trying the leading-space form
/// first: in a rendered dialogue the answer continues running text, so the
/// space-prefixed token is the form the model would actually produce. Falls
/// back to the bare word; anything longer is refused.
pub fn probe_single_token(backend: &dyn LogProbBackend, word: &str) -> Result<AnswerToken> {
    for candidate in [format!(" {word}"), word.to_string()] {
        match backend.tokenize(&candidate) {
            Ok(tokens) => {
                if let [token] = tokens.as_slice() {
                    return Ok(AnswerToken { token: *token, text: candidate });
                }
            }
            // Only a vocabulary miss falls through to the next surface form;
            // a transport failure is not evidence about the answer word.
            Err(Error::UnknownToken(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::MultiTokenAnswer(word.to_string()))
}

/// Renders `turns` plus an assistant turn holding the answer, stripped of
/// the role-closing marker, and slices the answer back off. The result is
/// the scoring prefix: the full dialogue up to and including the assistant
/// role opening, whose next token is the answer position.
fn scoring_prefix(
    backend: &dyn LogProbBackend,
    turns: &[ChatMessage],
    answer_text: &str,
    answer_tokens: &[TokenId],
) -> Result<RenderedPrompt> {
    let mut msgs = turns.to_vec();
    msgs.push(ChatMessage::assistant(answer_text));
    let rendered = backend.render_chat(&msgs, true)?;
    debug_assert!(rendered.role_end_stripped);
    if !rendered.tokens.ends_with(answer_tokens) {
        return Err(Error::Protocol(format!(
            "rendered prompt does not end with the answer token(s) for {answer_text:?}; \
             the backend tokenizer merged the answer across the turn boundary"
        )));
    }
    let text = rendered
        .text
        .strip_suffix(answer_text)
        .ok_or_else(|| Error::Protocol("rendered text does not end with the answer".into()))?
        .to_string();
    let tokens = rendered.tokens[..rendered.tokens.len() - answer_tokens.len()].to_vec();
    Ok(RenderedPrompt { tokens, text, role_end_stripped: true })
}

fn log_odds(
    backend: &dyn LogProbBackend,
    prefix: &RenderedPrompt,
    pos: &[TokenId],
    neg: &[TokenId],
) -> Result<f64> {
    let lp_pos = backend.continuation_logprob(prefix, pos)?.total;
    let lp_neg = backend.continuation_logprob(prefix, neg)?.total;
    let score = lp_pos - lp_neg;
    if !score.is_finite() {
        return Err(Error::Protocol(format!(
            "non-finite score (log p pos = {lp_pos}, log p neg = {lp_neg})"
        )));
    }
    Ok(score)
}

fn score_filled(
    backend: &dyn LogProbBackend,
    template: &PromptTemplate,
    turns: &[ChatMessage],
) -> Result<f64> {
    let pos = probe_single_token(backend, &template.answer_pos)?;
    let neg = probe_single_token(backend, &template.answer_neg)?;
    let prefix = scoring_prefix(backend, turns, &pos.text, &[pos.token])?;
    log_odds(backend, &prefix, &[pos.token], &[neg.token])
}

/// Scores a (source, hypothesis) pair with a two-placeholder template.
///
/// Templates with other placeholder counts need their bindings spelled out;
/// see [`pluie_score_bound`].
pub fn pluie_score(
    source: &str,
    hypothesis: &str,
    template: &PromptTemplate,
    backend: &dyn LogProbBackend,
) -> Result<f64> {
    let (s_slot, h_slot) = template.pair_slots().ok_or_else(|| {
        Error::Template(format!(
            "template {} takes {} placeholders, not a (source, hypothesis) pair; \
             bind them explicitly with pluie_score_bound",
            template.id,
            template.placeholders.len()
        ))
    })?;
    let mut bindings = BTreeMap::new();
    bindings.insert(s_slot.to_string(), source.to_string());
    bindings.insert(h_slot.to_string(), hypothesis.to_string());
    let turns = template.fill(&bindings)?;
    score_filled(backend, template, &turns)
}

/// Scores a template with explicit placeholder bindings, for templates that
/// take more than a pair (the revision templates bind reference,
/// instruction, hypothesis and optionally gold).
pub fn pluie_score_bound(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
    backend: &dyn LogProbBackend,
) -> Result<f64> {
    let turns = template.fill(bindings)?;
    score_filled(backend, template, &turns)
}

/// Multi-token generalization: chain-rule log-probability of each answer
/// sequence, no length normalization. With answers of different lengths the
/// shorter one is favoured, because every extra token multiplies in another
/// probability ≤ 1; callers compare like-for-like or accept that bias.
pub fn pluie_score_multi(
    source: &str,
    hypothesis: &str,
    template: &PromptTemplate,
    pos_answer: &[TokenId],
    neg_answer: &[TokenId],
    backend: &dyn LogProbBackend,
) -> Result<f64> {
    if pos_answer.is_empty() || neg_answer.is_empty() {
        return Err(Error::EmptyContinuation);
    }
    let (s_slot, h_slot) = template.pair_slots().ok_or_else(|| {
        Error::Template(format!(
            "template {} does not take a (source, hypothesis) pair",
            template.id
        ))
    })?;
    let mut bindings = BTreeMap::new();
    bindings.insert(s_slot.to_string(), source.to_string());
    bindings.insert(h_slot.to_string(), hypothesis.to_string());
    let turns = template.fill(&bindings)?;
    let pos_text = backend.detokenize(pos_answer)?;
    let prefix = scoring_prefix(backend, &turns, &pos_text, pos_answer)?;
    log_odds(backend, &prefix, pos_answer, neg_answer)
}

/// Scores both orderings. No symmetry is assumed: the two numbers answer
/// two different prompts. Fails whole; there is no partial result.
pub fn pluie_score_both(
    source: &str,
    hypothesis: &str,
    template: &PromptTemplate,
    backend: &dyn LogProbBackend,
) -> Result<(f64, f64)> {
    let forward = pluie_score(source, hypothesis, template, backend)?;
    let backward = pluie_score(hypothesis, source, template, backend)?;
    Ok((forward, backward))
}

/// Scores a pair into a [`ScoredPair`] record, optionally bidirectionally.
pub fn score_pair(
    source: &str,
    hypothesis: &str,
    template: &PromptTemplate,
    backend: &dyn LogProbBackend,
    bidirectional: bool,
) -> Result<ScoredPair> {
    let (score, score_reverse) = if bidirectional {
        let (f, b) = pluie_score_both(source, hypothesis, template, backend)?;
        (f, Some(b))
    } else {
        (pluie_score(source, hypothesis, template, backend)?, None)
    };
    Ok(ScoredPair {
        source: source.to_string(),
        hypothesis: hypothesis.to_string(),
        score,
        score_reverse,
        template: template.id,
        model: backend.model_id().to_string(),
    })
}
