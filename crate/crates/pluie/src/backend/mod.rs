//! Log-probability provider contract.
//!
//! Everything that scores text goes through [`LogProbBackend`]: a tokenizer,
//! a chat renderer with controlled role-end stripping, a conditional
//! log-probability oracle, and plain text generation for the output-based
//! judges. Two implementations ship with the crate: [`mock::MockBackend`],
//! a deterministic table-driven model for tests, and [`http::HttpBackend`],
//! a client for inference servers that echo per-token log-probabilities.
//!
//! All log-probabilities are natural log.

mod http;
pub mod mock;

pub use http::{HttpBackend, HttpDialect, API_KEY_ENV};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Duration;

use crate::error::{Error, Result};

/// Identifier a backend assigns to one vocabulary token.
///
/// Ids are stable within one backend session: tokenizing the same text twice
/// yields the same ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Speaker of one dialogue turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::System => write!(f, "system"),
            Role::User => write!(f, "user"),
            Role::Assistant => write!(f, "assistant"),
        }
    }
}

/// One turn of a role-tagged dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// A dialogue rendered into the backend's chat convention.
///
/// When `role_end_stripped` is set, the token sequence does not end with the
/// convention's assistant-closing marker; the last token belongs to the final
/// assistant content. `tokens` detokenizes back to `text`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub tokens: Vec<TokenId>,
    pub text: String,
    pub role_end_stripped: bool,
}

impl RenderedPrompt {
    /// A zero-token prompt, valid as a scoring prefix.
    pub fn empty() -> Self {
        RenderedPrompt { tokens: Vec::new(), text: String::new(), role_end_stripped: false }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Natural-log probabilities of a continuation, token by token.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbResult {
    /// `(token, log p(token | prefix ∘ earlier continuation tokens))`.
    pub per_token: Vec<(TokenId, f64)>,
    /// Sum of the per-token log-probabilities.
    pub total: f64,
}

impl LogProbResult {
    pub fn from_per_token(per_token: Vec<(TokenId, f64)>) -> Self {
        let total = per_token.iter().map(|(_, lp)| lp).sum();
        LogProbResult { per_token, total }
    }
}

/// Marker strings that open and close one role's turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMarkers {
    pub open: String,
    pub close: String,
}

impl RoleMarkers {
    pub fn new(open: impl Into<String>, close: impl Into<String>) -> Self {
        RoleMarkers { open: open.into(), close: close.into() }
    }
}

/// A chat convention: how each role's turn is delimited in plain text.
///
/// A dialogue renders as the in-order concatenation of
/// `open ∘ content ∘ close` for each turn, with no separators in between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatConvention {
    pub system: RoleMarkers,
    pub user: RoleMarkers,
    pub assistant: RoleMarkers,
}

impl ChatConvention {
    pub fn markers(&self, role: Role) -> &RoleMarkers {
        match role {
            Role::System => &self.system,
            Role::User => &self.user,
            Role::Assistant => &self.assistant,
        }
    }

    /// Render the dialogue to plain text, optionally leaving the final
    /// assistant turn unclosed.
    pub fn render_text(&self, messages: &[ChatMessage], strip_final_role_end: bool) -> String {
        let mut out = String::new();
        for (i, msg) in messages.iter().enumerate() {
            let m = self.markers(msg.role);
            out.push_str(&m.open);
            out.push_str(&msg.content);
            if !(strip_final_role_end && i == messages.len() - 1) {
                out.push_str(&m.close);
            }
        }
        out
    }

    /// ChatML-style markers, the default for the HTTP backend.
    pub fn chatml() -> Self {
        ChatConvention {
            system: RoleMarkers::new("<|im_start|>system\n", "<|im_end|>\n"),
            user: RoleMarkers::new("<|im_start|>user\n", "<|im_end|>\n"),
            assistant: RoleMarkers::new("<|im_start|>assistant\n", "<|im_end|>\n"),
        }
    }
}

/// Connection settings for the HTTP backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Completion endpoint URL, e.g. `http://host:8000/v1/completions`.
    pub endpoint: String,
    /// Model identifier sent with every request.
    pub model: String,
    /// Per-request timeout.
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    /// Concurrent in-flight request budget. Must be at least 1.
    pub max_parallel: usize,
    /// Retries after the first attempt, with exponential backoff.
    pub retries: u32,
}

impl BackendConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            timeout: Duration::from_secs(120),
            max_parallel: 4,
            retries: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_parallel < 1 {
            return Err(Error::Data("max_parallel must be at least 1".into()));
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(secs))
    }
}

/// One generated assistant reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub text: String,
    /// Set by the mock backend when no scripted reply matched the prompt and
    /// the deterministic empty fallback was returned instead.
    pub unscripted_fallback: bool,
}

impl Generation {
    pub fn reply(text: impl Into<String>) -> Self {
        Generation { text: text.into(), unscripted_fallback: false }
    }
}

/// The log-probability provider contract.
///
/// Implementations are safe for concurrent calls up to their configured
/// parallelism budget; every operation is stateless from the caller's view.
pub trait LogProbBackend: Send + Sync {
    /// Model identifier, recorded in scored outputs.
    fn model_id(&self) -> &str;

    /// Deterministically encode text. Empty text encodes to no tokens.
    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>>;

    /// Inverse of [`tokenize`](Self::tokenize), modulo the whitespace rules
    /// documented by the backend.
    fn detokenize(&self, tokens: &[TokenId]) -> Result<String>;

    /// Render a dialogue into the backend's chat convention.
    ///
    /// With `strip_final_role_end` the final turn must be an assistant turn,
    /// and the returned token sequence ends with that turn's content rather
    /// than the role-closing marker.
    fn render_chat(
        &self,
        messages: &[ChatMessage],
        strip_final_role_end: bool,
    ) -> Result<RenderedPrompt>;

    /// Natural-log probability of each continuation token, conditioned on
    /// the prefix plus the preceding continuation tokens.
    fn continuation_logprob(
        &self,
        prefix: &RenderedPrompt,
        continuation: &[TokenId],
    ) -> Result<LogProbResult>;

    /// Generate an assistant reply to the dialogue, at most `max_new_tokens`
    /// tokens long.
    fn generate(&self, messages: &[ChatMessage], max_new_tokens: usize) -> Result<Generation>;
}

/// Validates the shared render_chat preconditions.
pub(crate) fn check_render_preconditions(
    messages: &[ChatMessage],
    strip_final_role_end: bool,
) -> Result<()> {
    if messages.is_empty() {
        return Err(Error::ChatRender("message list is empty".into()));
    }
    for msg in messages {
        if msg.role != Role::System && msg.content.is_empty() {
            return Err(Error::ChatRender(format!("empty content in {} turn", msg.role)));
        }
    }
    if strip_final_role_end {
        let last = messages.last().expect("non-empty");
        if last.role != Role::Assistant {
            return Err(Error::ChatRender(
                "role-end stripping requires the final turn to be an assistant turn".into(),
            ));
        }
    }
    Ok(())
}
