//! Output plumbing: atomic file writes, input digests, sidecar metadata.
//!
//! Reports must be byte-identical across runs with the same configuration
//! and inputs, so anything volatile (timestamps, wall time) goes into a
//! `<out>.meta.json` sidecar instead of the primary output.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::Failure;

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// renamed into place only once fully written. A failure on any earlier step
/// leaves no partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::Data(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.flush().map_err(fail)?;
    tmp.persist(path)
        .map_err(|e| Failure::Data(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Serializes records one JSON object per line and writes them atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), Failure> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record)
            .map_err(|e| Failure::Data(format!("cannot serialize record: {e}")))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Pretty-prints a report document and writes it atomically.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Failure::Data(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Provenance stamp for an input file: path as configured plus content hash.
#[derive(Debug, Clone, Serialize)]
pub struct InputStamp {
    pub path: String,
    pub sha256: String,
    pub records: usize,
}

impl InputStamp {
    pub fn new(path: &Path, records: usize) -> Result<InputStamp, Failure> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        Ok(InputStamp {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
            records,
        })
    }
}

/// Wall-clock bookkeeping for the sidecar.
pub struct RunClock {
    started: Instant,
    unix_seconds: u64,
}

impl RunClock {
    pub fn start() -> RunClock {
        let unix_seconds = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunClock { started: Instant::now(), unix_seconds }
    }

    pub fn wall_ms(&self) -> u128 {
        self.started.elapsed().as_millis()
    }

    /// Writes `<out>.meta.json` next to the primary output.
    pub fn write_sidecar(&self, out: &Path, command: &str, records: usize) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Meta<'a> {
            command: &'a str,
            started_unix_seconds: u64,
            wall_ms: u128,
            records: usize,
        }
        let meta = Meta {
            command,
            started_unix_seconds: self.unix_seconds,
            wall_ms: self.wall_ms(),
            records,
        };
        write_report(&sidecar_path(out), &meta)
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn jsonl_is_one_object_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        write_jsonl(&path, &[serde_json::json!({"a": 1}), serde_json::json!({"a": 2})]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "{\"a\":1}\n{\"a\":2}\n");
    }

    #[test]
    fn input_stamp_hashes_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.jsonl");
        std::fs::write(&path, "abc").unwrap();
        let stamp = InputStamp::new(&path, 1).unwrap();
        // sha256("abc")
        assert_eq!(
            stamp.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sidecar_sits_next_to_the_output() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/report.json")),
            Path::new("/tmp/report.json.meta.json")
        );
    }
}
