//! Uniform JSON report envelope, content-addressed run identities, and the
//! append-only line-delimited run registry.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::input::{CliError, CliResult};

/// Every command emits this envelope.
#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub results: Value,
    pub realized_constants: Value,
    pub checks: Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            params: Map::new(),
            results: Value::Null,
            realized_constants: json!({}),
            checks: json!({}),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Canonical digest of the outcome: the report body minus anything
    /// timing-related (wall time is recorded in the registry only).
    pub fn outcome_digest(&self) -> String {
        let body = json!({
            "command": self.command,
            "params": Value::Object(self.params.clone()),
            "results": self.results,
            "realized_constants": self.realized_constants,
            "checks": self.checks,
        });
        sha_hex(body.to_string().as_bytes())
    }
}

pub fn sha_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// One appended line per run; identical (command, params, input, seed)
/// reproduce identical outcome digests.
#[derive(Serialize)]
pub struct RunRecord {
    pub run_id: String,
    pub command: String,
    pub params: Map<String, Value>,
    pub input_digest: String,
    pub seed: u64,
    pub outcome: Value,
    pub wall_time_ms: u128,
}

impl RunRecord {
    pub fn new(report: &Report, input_digest: String, seed: u64, wall: Duration, exit: u8) -> Self {
        let identity = json!({
            "command": report.command,
            "params": Value::Object(report.params.clone()),
            "input_digest": input_digest,
            "seed": seed,
        });
        let run_id = sha_hex(identity.to_string().as_bytes())[..16].to_string();
        RunRecord {
            run_id,
            command: report.command.clone(),
            params: report.params.clone(),
            input_digest,
            seed,
            outcome: json!({
                "exit_code": exit,
                "digest": report.outcome_digest(),
            }),
            wall_time_ms: wall.as_millis(),
        }
    }
}

/// Appends one record as a single line; the single-writer, single-`write`
/// discipline keeps concurrent registries line-atomic on POSIX appends.
pub fn registry_append(path: &Path, record: &RunRecord) -> CliResult<()> {
    let mut line = serde_json::to_string(record)
        .map_err(|e| CliError::usage(format!("cannot serialize run record: {e}")))?;
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::usage(format!("cannot open registry {}: {e}", path.display())))?;
    file.write_all(line.as_bytes())
        .and_then(|()| file.flush())
        .map_err(|e| CliError::usage(format!("cannot append to registry: {e}")))
}
