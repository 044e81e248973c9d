//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by backends, templates, scoring, and data loading.
#[derive(Debug, Error)]
pub enum Error {
    /// The backend cannot encode a piece of text with its vocabulary.
    #[error("unknown token: no vocabulary entry matches {0:?}")]
    UnknownToken(String),

    /// A token id that the backend has never issued.
    #[error("token id {0} is not in the backend vocabulary")]
    UnknownTokenId(u32),

    /// The backend has no probability entry for a (context, token) pair.
    #[error("no conditional probability configured for token {token} in context {context:?}")]
    MissingConditional { context: String, token: u32 },

    #[error("chat rendering: {0}")]
    ChatRender(String),

    /// Transport-level backend failure (after the configured retries).
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("backend request timed out after {retries} retries")]
    Timeout { retries: u32 },

    /// The server's response could not be mapped onto the wire contract.
    #[error("backend protocol: {0}")]
    Protocol(String),

    #[error("empty continuation")]
    EmptyContinuation,

    #[error("max_new_tokens must be at least 1")]
    ZeroMaxTokens,

    /// Answer word does not map to a single token; use the multi-token scorer.
    #[error("answer word {0:?} is not a single token under this backend; use pluie_score_multi")]
    MultiTokenAnswer(String),

    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),

    #[error("template: {0}")]
    Template(String),

    /// A placeholder in the template has no binding.
    #[error("missing binding for placeholder {0:?}")]
    MissingBinding(String),

    /// Strict fill: a binding name matches no placeholder.
    #[error("unused binding {0:?}")]
    UnusedBinding(String),

    #[error("invalid epsilon: {0}")]
    InvalidEpsilon(f64),

    #[error("unknown rating {0:?}")]
    UnknownRating(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{0}")]
    Data(String),

    /// Parse failure with line information for JSONL inputs.
    #[error("line {line}: {message}")]
    DataAtLine { line: usize, message: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("missing score for id {0:?}")]
    MissingScore(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
