use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const COLUMNS: [&str; 8] = ["instance_id", "method", "side", "value", "extra", "runtime_ms", "seed", "status"];

/// One result line. `value` is absent only on error rows.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub instance_id: String,
    pub method: String,
    pub side: String,
    pub value: Option<f64>,
    pub extra: String,
    pub runtime_ms: u64,
    pub seed: u64,
    pub status: String,
}

impl ResultRow {
    pub fn ok(id: &str, method: &str, side: &str, value: f64, extra: serde_json::Value, runtime_ms: u64, seed: u64) -> Self {
        let (value, status) = if value.is_finite() { (Some(value), "ok") } else { (None, "error") };
        ResultRow {
            instance_id: id.to_string(),
            method: method.to_string(),
            side: side.to_string(),
            value,
            extra: extra.to_string(),
            runtime_ms,
            seed,
            status: status.to_string(),
        }
    }

    pub fn error(id: &str, method: &str, seed: u64, err: &CliError) -> Self {
        ResultRow {
            instance_id: id.to_string(),
            method: method.to_string(),
            side: String::new(),
            value: None,
            extra: serde_json::json!({ "error": err.to_string(), "exit_code": err.exit_code() }).to_string(),
            runtime_ms: 0,
            seed,
            status: "error".to_string(),
        }
    }

    pub fn extra_json(&self) -> serde_json::Value {
        serde_json::from_str(&self.extra).unwrap_or(serde_json::Value::Null)
    }
}

/// First 16 hex digits of SHA-256 over the canonical serialization.
pub fn content_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn write_rows(rows: &[ResultRow], out: Option<&Path>) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(CliError::Validation(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}
