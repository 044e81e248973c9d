//! Subcommand implementations.

pub mod agree;
pub mod build_dataset;
pub mod check_align;
pub mod classify;
pub mod prefer;
pub mod score;
pub mod sweep;

use serde::Serialize;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use pluie::backend::mock::MockBackend;
use pluie::backend::{HttpBackend, LogProbBackend};

use crate::config::{BackendChoice, RunConfig};
use crate::output::InputStamp;
use crate::{lib_failure, Failure};

/// Common envelope of every report document: what ran, on what bytes, with
/// which parameters. Volatile data (timestamps) lives in the sidecar only.
#[derive(Serialize)]
pub struct ReportDoc<T: Serialize> {
    pub command: &'static str,
    pub input: InputStamp,
    pub parameters: serde_json::Value,
    #[serde(flatten)]
    pub body: T,
}

/// Builds the configured backend, checking the pieces it needs are present.
pub fn build_backend(config: &RunConfig) -> Result<Box<dyn LogProbBackend>, Failure> {
    match &config.backend {
        BackendChoice::Mock(path) => {
            let backend = MockBackend::from_path(path)
                .map_err(|e| Failure::Data(format!("mock table {}: {e}", path.display())))?;
            Ok(Box::new(backend))
        }
        BackendChoice::Http(settings) => {
            if settings.endpoint.is_empty() {
                return Err(Failure::Usage("--endpoint is required for the http backend".into()));
            }
            if settings.model.is_empty() {
                return Err(Failure::Usage("--model is required for the http backend".into()));
            }
            let backend = HttpBackend::new(settings.clone()).map_err(lib_failure)?;
            Ok(Box::new(backend))
        }
    }
}

/// Applies `f` to every item on up to `parallel` threads, preserving input
/// order in the result. The first failure (by input order) aborts the whole
/// map, so a failed run is deterministic and produces nothing partial.
pub fn parallel_map<T, R, F>(items: &[T], parallel: usize, f: F) -> Result<Vec<R>, Failure>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, Failure> + Sync,
{
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let workers = parallel.clamp(1, items.len());
    if workers == 1 {
        return items.iter().map(f).collect();
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<R, Failure>>>> =
        items.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                if result.is_err() {
                    stop.store(true, Ordering::Relaxed);
                }
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });

    // Indices are claimed in order, so the first unfilled slot can only come
    // after a filled error slot; scanning in order reports the earliest error.
    let mut out = Vec::with_capacity(items.len());
    for slot in slots {
        match slot.into_inner().expect("slot lock") {
            Some(Ok(value)) => out.push(value),
            Some(Err(failure)) => return Err(failure),
            None => return Err(Failure::Data("scoring aborted".into())),
        }
    }
    Ok(out)
}
