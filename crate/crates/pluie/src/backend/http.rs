//! HTTP client for inference servers that echo per-token log-probabilities.
//!
//! Targets completion-style endpoints: scoring sends the full prompt with
//! `echo = true`, `max_tokens = 0`, `logprobs = 1` and reads the prompt
//! tokens back with their log-probabilities. Field mapping lives in
//! [`HttpDialect`] so another server shape is one adapter away.
//!
//! Token ids are session-local: the server reports token text, and the
//! client interns each distinct text to a stable id for the lifetime of the
//! backend. If authentication is needed, set `PLUIE_API_KEY`; the value is
//! sent as a bearer token and never logged or written to reports.

use serde_json::{json, Value};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::{
    check_render_preconditions, BackendConfig, ChatConvention, ChatMessage, Generation,
    LogProbBackend, LogProbResult, RenderedPrompt, TokenId,
};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "PLUIE_API_KEY";

/// Wire-format adapter for one family of inference servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HttpDialect {
    /// OpenAI-style `/v1/completions`: `echo` + `logprobs` expose prompt
    /// token log-probabilities; served by vLLM, llama.cpp and similar.
    #[default]
    Completions,
}

impl HttpDialect {
    fn score_request(&self, model: &str, prompt: &str) -> Value {
        match self {
            HttpDialect::Completions => json!({
                "model": model,
                "prompt": prompt,
                "max_tokens": 0,
                "echo": true,
                "logprobs": 1,
            }),
        }
    }

    fn generate_request(
        &self,
        model: &str,
        prompt: &str,
        max_new_tokens: usize,
        stop: &str,
    ) -> Value {
        match self {
            HttpDialect::Completions => {
                let mut req = json!({
                    "model": model,
                    "prompt": prompt,
                    "max_tokens": max_new_tokens,
                    "temperature": 0,
                });
                if !stop.is_empty() {
                    req["stop"] = json!([stop]);
                }
                req
            }
        }
    }

    /// Echoed prompt positions as (token text, log-probability). The first
    /// position has no conditioning context; servers report it as null.
    fn parse_echo(&self, body: &Value) -> Result<Vec<(String, Option<f64>)>> {
        match self {
            HttpDialect::Completions => {
                let logprobs = body
                    .pointer("/choices/0/logprobs")
                    .ok_or_else(|| protocol("response has no choices[0].logprobs"))?;
                let tokens = as_array(logprobs, "tokens")?;
                let lps = as_array(logprobs, "token_logprobs")?;
                if tokens.len() != lps.len() {
                    return Err(protocol("tokens and token_logprobs lengths differ"));
                }
                tokens
                    .iter()
                    .zip(lps)
                    .map(|(t, lp)| {
                        let text = t
                            .as_str()
                            .ok_or_else(|| protocol("non-string entry in tokens"))?
                            .to_string();
                        let lp = match lp {
                            Value::Null => None,
                            v => Some(
                                v.as_f64().ok_or_else(|| {
                                    protocol("non-numeric entry in token_logprobs")
                                })?,
                            ),
                        };
                        Ok((text, lp))
                    })
                    .collect()
            }
        }
    }

    fn parse_text(&self, body: &Value) -> Result<String> {
        match self {
            HttpDialect::Completions => body
                .pointer("/choices/0/text")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| protocol("response has no choices[0].text")),
        }
    }
}

fn protocol(msg: impl Into<String>) -> Error {
    Error::Protocol(msg.into())
}

fn as_array<'v>(v: &'v Value, key: &str) -> Result<&'v Vec<Value>> {
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| protocol(format!("logprobs.{key} missing or not an array")))
}

/// Checks that the echoed positions end with exactly the requested
/// continuation, token for token, and returns those log-probabilities.
///
/// The server re-tokenizes the concatenated text, so a continuation that the
/// server would merge across the prefix boundary (or split differently) is a
/// contract violation, not a score.
fn align_continuation(
    echoed: &[(String, Option<f64>)],
    continuation_texts: &[String],
) -> Result<Vec<f64>> {
    let k = continuation_texts.len();
    if echoed.len() < k {
        return Err(protocol(format!(
            "server echoed {} tokens, fewer than the {k}-token continuation",
            echoed.len()
        )));
    }
    let tail = &echoed[echoed.len() - k..];
    let mut out = Vec::with_capacity(k);
    for (i, ((text, lp), want)) in tail.iter().zip(continuation_texts).enumerate() {
        if text != want {
            return Err(protocol(format!(
                "continuation token {i} tokenized as {text:?} by the server, expected {want:?}"
            )));
        }
        match lp {
            Some(lp) => out.push(*lp),
            None => {
                return Err(protocol(
                    "no log-probability for a continuation token (empty prefix?)",
                ))
            }
        }
    }
    Ok(out)
}

/// Interns server-reported token texts to session-local ids.
#[derive(Default)]
struct Interner {
    ids: std::collections::HashMap<String, u32>,
    texts: Vec<String>,
}

impl Interner {
    fn intern(&mut self, text: &str) -> TokenId {
        if let Some(&id) = self.ids.get(text) {
            return TokenId(id);
        }
        let id = self.texts.len() as u32;
        self.texts.push(text.to_string());
        self.ids.insert(text.to_string(), id);
        TokenId(id)
    }

    fn text(&self, id: TokenId) -> Result<&str> {
        self.texts
            .get(id.0 as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownTokenId(id.0))
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(permits: usize) -> Self {
        Gate { permits: Mutex::new(permits), cv: Condvar::new() }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().expect("gate poisoned");
        while *permits == 0 {
            permits = self.cv.wait(permits).expect("gate poisoned");
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.gate.permits.lock().expect("gate poisoned");
        *permits += 1;
        self.gate.cv.notify_one();
    }
}

/// [`LogProbBackend`] over HTTP.
pub struct HttpBackend {
    config: BackendConfig,
    dialect: HttpDialect,
    convention: ChatConvention,
    client: reqwest::blocking::Client,
    interner: Mutex<Interner>,
    gate: Gate,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        Ok(HttpBackend {
            gate: Gate::new(config.max_parallel),
            config,
            dialect: HttpDialect::default(),
            convention: ChatConvention::chatml(),
            client,
            interner: Mutex::new(Interner::default()),
            api_key: std::env::var(API_KEY_ENV).ok(),
        })
    }

    pub fn with_convention(mut self, convention: ChatConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_dialect(mut self, dialect: HttpDialect) -> Self {
        self.dialect = dialect;
        self
    }

    pub fn convention(&self) -> &ChatConvention {
        &self.convention
    }

    /// POSTs with bounded parallelism and exponential backoff. Transport
    /// failures and 5xx responses are retried; 4xx fails fast.
    fn post(&self, body: &Value) -> Result<Value> {
        let _permit = self.gate.acquire();
        let mut timed_out = false;
        let mut last_error = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 << (attempt - 1).min(6)));
            }
            let mut req = self.client.post(&self.config.endpoint).json(body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<Value>()
                            .map_err(|e| protocol(format!("response is not JSON: {e}")));
                    }
                    let body = resp.text().unwrap_or_default();
                    let snippet: String = body.chars().take(200).collect();
                    if status.is_client_error() {
                        return Err(protocol(format!("server returned {status}: {snippet}")));
                    }
                    last_error = format!("{status}: {snippet}");
                    timed_out = false;
                }
                Err(e) => {
                    timed_out = e.is_timeout();
                    last_error = e.to_string();
                }
            }
        }
        if timed_out {
            Err(Error::Timeout { retries: self.config.retries })
        } else {
            Err(Error::BackendUnavailable(last_error))
        }
    }

    /// One echo round trip: the server's tokenization of `text` with
    /// per-position log-probabilities, interned.
    fn echo(&self, text: &str) -> Result<Vec<(TokenId, String, Option<f64>)>> {
        let body = self.post(&self.dialect.score_request(&self.config.model, text))?;
        let echoed = self.dialect.parse_echo(&body)?;
        let joined: String = echoed.iter().map(|(t, _)| t.as_str()).collect();
        if joined != text {
            return Err(protocol(
                "echoed tokens do not concatenate back to the prompt text",
            ));
        }
        let mut interner = self.interner.lock().expect("interner poisoned");
        Ok(echoed
            .into_iter()
            .map(|(text, lp)| {
                let id = interner.intern(&text);
                (id, text, lp)
            })
            .collect())
    }
}

impl LogProbBackend for HttpBackend {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.echo(text)?.into_iter().map(|(id, _, _)| id).collect())
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let interner = self.interner.lock().expect("interner poisoned");
        let mut out = String::new();
        for &t in tokens {
            out.push_str(interner.text(t)?);
        }
        Ok(out)
    }

    fn render_chat(
        &self,
        messages: &[ChatMessage],
        strip_final_role_end: bool,
    ) -> Result<RenderedPrompt> {
        check_render_preconditions(messages, strip_final_role_end)?;
        let text = self.convention.render_text(messages, strip_final_role_end);
        let tokens = self.tokenize(&text)?;
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
        let continuation_texts: Vec<String> = {
            let interner = self.interner.lock().expect("interner poisoned");
            continuation
                .iter()
                .map(|&t| interner.text(t).map(str::to_string))
                .collect::<Result<_>>()?
        };
        let full: String = format!("{}{}", prefix.text, continuation_texts.concat());
        let echoed = self.echo(&full)?;
        let flat: Vec<(String, Option<f64>)> =
            echoed.into_iter().map(|(_, text, lp)| (text, lp)).collect();
        let lps = align_continuation(&flat, &continuation_texts)?;
        let per_token = continuation.iter().copied().zip(lps).collect();
        Ok(LogProbResult::from_per_token(per_token))
    }

    fn generate(&self, messages: &[ChatMessage], max_new_tokens: usize) -> Result<Generation> {
        if max_new_tokens == 0 {
            return Err(Error::ZeroMaxTokens);
        }
        check_render_preconditions(messages, false)?;
        let mut prompt = self.convention.render_text(messages, false);
        prompt.push_str(&self.convention.assistant.open);
        let body = self.post(&self.dialect.generate_request(
            &self.config.model,
            &prompt,
            max_new_tokens,
            &self.convention.assistant.close,
        ))?;
        Ok(Generation::reply(self.dialect.parse_text(&body)?))
    }
}
