//! Perplexity-based log-odds judging, output-based judge baselines, lexical
//! baselines, and the statistics used to evaluate all of them.
//!
//! The central metric scores a (source, hypothesis) pair by asking a language
//! model a yes/no question about the pair and comparing the log-probability
//! of the "Yes" answer token against the "No" answer token, read directly
//! from the model rather than from its sampled output. Everything else in
//! the crate exists to feed that metric (backends, prompt templates), to
//! compare against it (output-based judges, lexical similarity), or to
//! evaluate it (classification, threshold sweeps, agreement statistics).

pub mod backend;
pub mod templates;
pub mod datasets;
pub mod error;
pub mod judges;
pub mod lexical;
pub mod score;
pub mod stats;

pub use backend::{
    BackendConfig, ChatConvention, ChatMessage, Generation, HttpBackend, LogProbBackend,
    LogProbResult, RenderedPrompt, Role, RoleMarkers, TokenId,
};
pub use error::{Error, Result};
