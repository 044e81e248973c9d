//! End-to-end tests of the HTTP backend against a canned in-process server.
//!
//! The server speaks just enough of the completions protocol to exercise
//! the real network path: echo scoring with per-token log-probabilities,
//! generation, retry and failure behavior, and bearer authentication. Its
//! tokenizer starts a new token at every space, so a leading-space answer
//! word always comes back as a single token.

use serde_json::{json, Value};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use pluie::backend::API_KEY_ENV;
use pluie::score::pluie_score;
use pluie::templates::{PromptTemplate, TemplateId};
use pluie::{
    BackendConfig, ChatConvention, ChatMessage, Error, HttpBackend, LogProbBackend, RoleMarkers,
};

struct Captured {
    headers: String,
    body: Value,
}

struct Server {
    endpoint: String,
    hits: Arc<AtomicUsize>,
    requests: Arc<Mutex<Vec<Captured>>>,
}

fn read_request(stream: &TcpStream) -> Option<Captured> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut headers = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        if line == "\r\n" || line == "\n" {
            break;
        }
        headers.push_str(&line);
    }
    let length = headers
        .lines()
        .find_map(|l| {
            let (key, value) = l.split_once(':')?;
            key.trim()
                .eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).ok()?;
    Some(Captured { headers, body: serde_json::from_slice(&body).ok()? })
}

fn write_response(mut stream: &TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        500 => "Internal Server Error",
        _ => "Other",
    };
    let message = format!(
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\n\
         content-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(message.as_bytes());
}

/// Serves connections sequentially, one response per connection, routing
/// each request through `handler(request_index, request)`.
fn serve(handler: impl Fn(usize, &Captured) -> (u16, String) + Send + 'static) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let endpoint = format!("http://{}", listener.local_addr().expect("addr"));
    let hits = Arc::new(AtomicUsize::new(0));
    let requests = Arc::new(Mutex::new(Vec::new()));
    let (hit_count, request_log) = (hits.clone(), requests.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let Some(request) = read_request(&stream) else { continue };
            let index = hit_count.fetch_add(1, Ordering::SeqCst);
            let (status, body) = handler(index, &request);
            write_response(&stream, status, &body);
            request_log.lock().expect("log").push(request);
        }
    });
    Server { endpoint, hits, requests }
}

/// A new token starts at every space, so concatenation is preserved and
/// " Yes" / " No" are single tokens.
fn space_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch == ' ' && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        current.push(ch);
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn canned_logprob(token: &str) -> f64 {
    match token {
        " Yes" => (0.9f64).ln(),
        " No" => (0.1f64).ln(),
        _ => -1.0,
    }
}

fn echo_response(prompt: &str) -> String {
    let tokens = space_tokens(prompt);
    let logprobs: Vec<Value> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| if i == 0 { Value::Null } else { json!(canned_logprob(t)) })
        .collect();
    json!({
        "choices": [{
            "text": prompt,
            "logprobs": {"tokens": tokens, "token_logprobs": logprobs}
        }]
    })
    .to_string()
}

/// Echoes scoring requests; answers generation requests with `reply`.
fn completions_handler(reply: &'static str) -> impl Fn(usize, &Captured) -> (u16, String) {
    move |_, request| {
        let prompt = request.body["prompt"].as_str().expect("string prompt");
        if request.body["max_tokens"] == 0 {
            (200, echo_response(prompt))
        } else {
            (200, json!({"choices": [{"text": reply}]}).to_string())
        }
    }
}

fn tag_convention() -> ChatConvention {
    ChatConvention {
        system: RoleMarkers::new("<s>", "</s>"),
        user: RoleMarkers::new("<u>", "</u>"),
        assistant: RoleMarkers::new("<a>", "</a>"),
    }
}

fn backend(server: &Server, retries: u32) -> HttpBackend {
    let mut config = BackendConfig::new(server.endpoint.clone(), "test-model");
    config.retries = retries;
    HttpBackend::new(config).expect("backend").with_convention(tag_convention())
}

fn pair_template() -> PromptTemplate {
    PromptTemplate {
        id: TemplateId::Para,
        answer_pos: "Yes".into(),
        answer_neg: "No".into(),
        placeholders: vec!["s".into(), "h".into()],
        turns: vec![ChatMessage::user("{s} and {h}")],
    }
}

#[test]
fn scores_a_pair_over_the_wire() {
    let server = serve(completions_handler(" unused"));
    let b = backend(&server, 0);
    let score = pluie_score("premier", "second", &pair_template(), &b).unwrap();
    // The canned server assigns p(Yes) = 0.9 and p(No) = 0.1 at the answer
    // position, so the log-odds are ln 9.
    assert!((score - 9.0f64.ln()).abs() < 1e-9, "score = {score}");
    // Answer probes, prefix render, and two continuation scorings.
    assert!(server.hits.load(Ordering::SeqCst) >= 4);
}

#[test]
fn generates_through_the_chat_convention() {
    let server = serve(completions_handler(" All good."));
    let b = backend(&server, 0);
    let turns = vec![ChatMessage::system("be brief"), ChatMessage::user("status?")];
    let reply = b.generate(&turns, 16).unwrap();
    assert_eq!(reply.text, " All good.");
    assert!(!reply.unscripted_fallback);

    let requests = server.requests.lock().unwrap();
    let body = &requests[0].body;
    assert_eq!(body["prompt"], "<s>be brief</s><u>status?</u><a>");
    assert_eq!(body["max_tokens"], 16);
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["stop"], json!(["</a>"]));
    assert_eq!(body["model"], "test-model");
}

#[test]
fn transient_server_errors_are_retried() {
    let server = serve(|attempt, request| {
        if attempt == 0 {
            (500, "{\"error\": \"overloaded\"}".to_string())
        } else {
            (200, echo_response(request.body["prompt"].as_str().unwrap()))
        }
    });
    let b = backend(&server, 2);
    let tokens = b.tokenize("un deux").unwrap();
    assert_eq!(tokens.len(), 2);
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn client_errors_fail_fast_without_retry() {
    let server = serve(|_, _| (400, "{\"error\": \"bad request\"}".to_string()));
    let b = backend(&server, 3);
    match b.tokenize("x").unwrap_err() {
        Error::Protocol(msg) => assert!(msg.contains("400"), "message: {msg}"),
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn exhausted_retries_report_unavailable() {
    let server = serve(|_, _| (500, "{\"error\": \"down\"}".to_string()));
    let b = backend(&server, 1);
    match b.tokenize("x").unwrap_err() {
        Error::BackendUnavailable(msg) => assert!(msg.contains("500"), "message: {msg}"),
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn stalled_responses_surface_as_timeouts() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let _request = read_request(&stream);
            // Hold the connection open past the client deadline.
            std::thread::sleep(Duration::from_secs(2));
            drop(stream);
        }
    });
    let mut config = BackendConfig::new(endpoint, "test-model");
    config.timeout = Duration::from_millis(150);
    config.retries = 0;
    let b = HttpBackend::new(config).unwrap();
    match b.tokenize("x").unwrap_err() {
        Error::Timeout { retries } => assert_eq!(retries, 0),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn refused_connections_report_unavailable() {
    let port = {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
        // Listener drops here; nothing is listening any more.
    };
    let mut config = BackendConfig::new(format!("http://127.0.0.1:{port}"), "test-model");
    config.retries = 0;
    let b = HttpBackend::new(config).unwrap();
    assert!(matches!(b.tokenize("x"), Err(Error::BackendUnavailable(_))));
}

#[test]
fn api_key_from_the_environment_is_sent_as_bearer() {
    let server = serve(completions_handler(" unused"));
    std::env::set_var(API_KEY_ENV, "sk-test-123");
    let b = backend(&server, 0);
    std::env::remove_var(API_KEY_ENV);
    b.tokenize("hello").unwrap();
    let requests = server.requests.lock().unwrap();
    let headers = requests[0].headers.to_lowercase();
    assert!(headers.contains("authorization: bearer sk-test-123"), "headers: {headers}");
}
