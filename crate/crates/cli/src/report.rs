use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "involute/run-report/v1";

/// One pass/fail line of a run.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub id: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl CheckEntry {
    pub fn new(id: impl Into<String>, pass: bool, detail: Value) -> Self {
        Self { id: id.into(), pass, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    /// `sha256:` over every input, each prefixed by its label.
    pub inputs_digest: String,
    pub seed: u64,
    pub checks: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
}

/// Hashes labelled inputs in the order they are read.
#[derive(Default)]
pub struct InputDigest {
    hasher: Sha256,
}

impl InputDigest {
    pub fn add(&mut self, label: &str, bytes: &[u8]) {
        self.hasher.update((label.len() as u64).to_le_bytes());
        self.hasher.update(label.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn finish(self) -> String {
        format!("sha256:{}", hex::encode(self.hasher.finalize()))
    }
}

/// Stage timer; readings are only reported under `--timings`.
pub struct Timings {
    start: Instant,
    stages: BTreeMap<String, f64>,
}

impl Timings {
    pub fn new() -> Self {
        Self { start: Instant::now(), stages: BTreeMap::new() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.insert(stage.into(), (now - self.start).as_secs_f64() * 1e3);
        self.start = now;
    }

    pub fn into_map(self) -> BTreeMap<String, f64> {
        self.stages
    }
}

/// What a command hands back before the report is assembled.
pub struct Outcome {
    pub checks: Vec<CheckEntry>,
    pub results: Value,
}

impl RunReport {
    pub fn assemble(command: &str, digest: String, seed: u64, outcome: Outcome, timings: Option<Timings>) -> Self {
        let exit_code = if outcome.checks.iter().all(|c| c.pass) { 0 } else { 1 };
        Self {
            schema: SCHEMA,
            command: command.into(),
            inputs_digest: digest,
            seed,
            checks: outcome.checks,
            results: outcome.results,
            timings_ms: timings.map(Timings::into_map),
            error: None,
            exit_code,
        }
    }

    pub fn input_error(command: &str, digest: String, seed: u64, message: String) -> Self {
        Self {
            schema: SCHEMA,
            command: command.into(),
            inputs_digest: digest,
            seed,
            checks: Vec::new(),
            results: Value::Null,
            timings_ms: None,
            error: Some(message),
            exit_code: 2,
        }
    }
}
