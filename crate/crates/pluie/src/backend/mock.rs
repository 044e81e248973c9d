//! Deterministic table-driven backend for tests.
//!
//! A [`MockTable`] specifies everything the model "knows": a vocabulary,
//! chat-convention markers, conditional next-token probabilities, and
//! scripted generation replies. [`MockBackend`] compiles the table into an
//! immutable model that is exact and reproducible, so tests can pin expected
//! scores to closed-form values.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{
    check_render_preconditions, ChatConvention, ChatMessage, Generation, LogProbBackend,
    LogProbResult, RenderedPrompt, TokenId,
};
use crate::error::{Error, Result};

/// On-disk description of a mock model.
///
/// `conditionals` maps a context (the exact text the context tokens
/// detokenize to; `""` is the start of sequence) to a map from single-token
/// text to its probability. `scripts` maps a full rendered dialogue (all
/// turns closed) to the reply `generate` returns for it. Keys are plain text
/// rather than digests so tables stay hand-writable.
///
/// When `fallback_probability` is null, querying an unconfigured
/// (context, token) pair is an error; when set, that probability is used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockTable {
    pub vocabulary: BTreeMap<String, u32>,
    pub chat_convention: ChatConvention,
    #[serde(default)]
    pub conditionals: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub scripts: BTreeMap<String, String>,
    #[serde(default)]
    pub fallback_probability: Option<f64>,
}

impl Default for MockTable {
    fn default() -> Self {
        MockTable {
            vocabulary: BTreeMap::new(),
            chat_convention: ChatConvention::chatml(),
            conditionals: BTreeMap::new(),
            scripts: BTreeMap::new(),
            fallback_probability: None,
        }
    }
}

/// Table-driven [`LogProbBackend`]. Immutable after construction.
pub struct MockBackend {
    vocab: HashMap<String, TokenId>,
    rev: HashMap<TokenId, String>,
    max_token_len: usize,
    convention: ChatConvention,
    /// context tokens → continuation token → probability (not log).
    conditionals: HashMap<Vec<TokenId>, HashMap<TokenId, f64>>,
    scripts: HashMap<String, String>,
    fallback: Option<f64>,
}

impl MockBackend {
    pub fn new(table: MockTable) -> Result<Self> {
        let mut vocab: HashMap<String, TokenId> = HashMap::new();
        let mut rev: HashMap<TokenId, String> = HashMap::new();
        let mut next_id = 0u32;
        for (text, id) in &table.vocabulary {
            if text.is_empty() {
                return Err(Error::Data("vocabulary entry with empty text".into()));
            }
            if rev.insert(TokenId(*id), text.clone()).is_some() {
                return Err(Error::Data(format!("vocabulary reuses token id {id}")));
            }
            vocab.insert(text.clone(), TokenId(*id));
            next_id = next_id.max(id + 1);
        }

        // Markers become atomic vocabulary entries so rendered dialogues
        // always tokenize, whatever the content vocabulary looks like.
        let conv = &table.chat_convention;
        for marker in [
            &conv.system.open,
            &conv.system.close,
            &conv.user.open,
            &conv.user.close,
            &conv.assistant.open,
            &conv.assistant.close,
        ] {
            if !marker.is_empty() && !vocab.contains_key(marker.as_str()) {
                let id = TokenId(next_id);
                next_id += 1;
                vocab.insert(marker.clone(), id);
                rev.insert(id, marker.clone());
            }
        }

        let max_token_len = vocab.keys().map(|t| t.len()).max().unwrap_or(0);

        let mut backend = MockBackend {
            vocab,
            rev,
            max_token_len,
            convention: table.chat_convention,
            conditionals: HashMap::new(),
            scripts: table.scripts.into_iter().collect(),
            fallback: table.fallback_probability,
        };

        if let Some(p) = backend.fallback {
            check_probability(p, "fallback_probability")?;
        }
        for (context_text, row) in table.conditionals {
            let context = backend.tokenize(&context_text).map_err(|e| {
                Error::Data(format!("conditional context {context_text:?}: {e}"))
            })?;
            let mut compiled = HashMap::new();
            for (token_text, p) in row {
                check_probability(p, "conditional probability")?;
                let toks = backend.tokenize(&token_text).map_err(|e| {
                    Error::Data(format!("conditional token {token_text:?}: {e}"))
                })?;
                if toks.len() != 1 {
                    return Err(Error::Data(format!(
                        "conditional token {token_text:?} tokenizes to {} tokens, expected 1",
                        toks.len()
                    )));
                }
                compiled.insert(toks[0], p);
            }
            backend.conditionals.insert(context, compiled);
        }

        Ok(backend)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let table: MockTable = serde_json::from_str(json)?;
        MockBackend::new(table)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        MockBackend::from_json(&json)
    }

    pub fn convention(&self) -> &ChatConvention {
        &self.convention
    }

    /// Text the token sequence stands for, substituting `⟨id⟩` for ids the
    /// vocabulary does not know. Used for error messages only.
    fn lossy_text(&self, tokens: &[TokenId]) -> String {
        tokens
            .iter()
            .map(|t| self.rev.get(t).cloned().unwrap_or_else(|| format!("⟨{t}⟩")))
            .collect()
    }

    fn lookup(&self, context: &[TokenId], token: TokenId) -> Result<f64> {
        let p = self.conditionals.get(context).and_then(|row| row.get(&token)).copied();
        match p.or(self.fallback) {
            Some(p) => Ok(p.ln()),
            None => Err(Error::MissingConditional {
                context: self.lossy_text(context),
                token: token.0,
            }),
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Data(format!("{what} must be in (0, 1], got {p}")));
    }
    Ok(())
}

impl LogProbBackend for MockBackend {
    fn model_id(&self) -> &str {
        "mock"
    }

    /// Greedy longest-match over the vocabulary.
    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        let mut tokens = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            let cap = self.max_token_len.min(text.len() - pos);
            let mut matched = None;
            for len in (1..=cap).rev() {
                if !text.is_char_boundary(pos + len) {
                    continue;
                }
                if let Some(&id) = self.vocab.get(&text[pos..pos + len]) {
                    matched = Some((id, len));
                    break;
                }
            }
            match matched {
                Some((id, len)) => {
                    tokens.push(id);
                    pos += len;
                }
                None => {
                    let tail: String = text[pos..].chars().take(16).collect();
                    return Err(Error::UnknownToken(tail));
                }
            }
        }
        Ok(tokens)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        for t in tokens {
            match self.rev.get(t) {
                Some(text) => out.push_str(text),
                None => return Err(Error::UnknownTokenId(t.0)),
            }
        }
        Ok(out)
    }

    /// Renders marker and content segments separately, so stripping the
    /// final role end never changes how earlier segments tokenize.
    fn render_chat(
        &self,
        messages: &[ChatMessage],
        strip_final_role_end: bool,
    ) -> Result<RenderedPrompt> {
        check_render_preconditions(messages, strip_final_role_end)?;
        let mut tokens = Vec::new();
        let mut text = String::new();
        let push = |segment: &str, tokens: &mut Vec<TokenId>, text: &mut String| -> Result<()> {
            tokens.extend(self.tokenize(segment)?);
            text.push_str(segment);
            Ok(())
        };
        for (i, msg) in messages.iter().enumerate() {
            let markers = self.convention.markers(msg.role);
            push(&markers.open, &mut tokens, &mut text)?;
            push(&msg.content, &mut tokens, &mut text)?;
            if !(strip_final_role_end && i == messages.len() - 1) {
                push(&markers.close, &mut tokens, &mut text)?;
            }
        }
        Ok(RenderedPrompt { tokens, text, role_end_stripped: strip_final_role_end })
    }

    fn continuation_logprob(
        &self,
        prefix: &RenderedPrompt,
        continuation: &[TokenId],
    ) -> Result<LogProbResult> {
        if continuation.is_empty() {
            return Err(Error::EmptyContinuation);
        }
        let mut context = prefix.tokens.clone();
        let mut per_token = Vec::with_capacity(continuation.len());
        for &token in continuation {
            let lp = self.lookup(&context, token)?;
            per_token.push((token, lp));
            context.push(token);
        }
        Ok(LogProbResult::from_per_token(per_token))
    }

    fn generate(&self, messages: &[ChatMessage], max_new_tokens: usize) -> Result<Generation> {
        if max_new_tokens == 0 {
            return Err(Error::ZeroMaxTokens);
        }
        check_render_preconditions(messages, false)?;
        let prompt = self.convention.render_text(messages, false);
        let reply = match self.scripts.get(&prompt) {
            Some(reply) => reply.clone(),
            None => return Ok(Generation { text: String::new(), unscripted_fallback: true }),
        };
        // Length cap applies when the reply is expressible in the vocabulary;
        // scripted replies outside it (JSON syntax, usually) pass through whole.
        let text = match self.tokenize(&reply) {
            Ok(toks) if toks.len() > max_new_tokens => self.detokenize(&toks[..max_new_tokens])?,
            _ => reply,
        };
        Ok(Generation { text, unscripted_fallback: false })
    }
}
