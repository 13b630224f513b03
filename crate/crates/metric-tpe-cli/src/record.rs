//! Trial records and their JSON-lines form. Floats are rendered with 17
//! significant digits so logs round-trip exactly and reruns are
//! byte-identical.

use std::path::{Path, PathBuf};

use metric_tpe::{ParamValue, ParamVector};
use thiserror::Error;

/// Errors from reading a trial log.
#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line} is not valid JSON: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },

    #[error("line {line}: field `{field}` is missing or has the wrong type")]
    Field { line: usize, field: &'static str },

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One completed objective evaluation within one study.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Identifies the study: problem label, optimizer label, and seed.
    pub run_id: String,
    pub optimizer: String,
    pub problem: String,
    pub seed: u64,
    pub trial: usize,
    pub params: ParamVector,
    pub value: f64,
    pub best_value: f64,
}

/// Decimal rendering with 17 significant digits: enough for every f64 to
/// round-trip exactly, and platform-independent.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl TrialRecord {
    /// Serializes to one JSON object with a fixed field order. Categorical
    /// parameters appear as bare integers, continuous ones as floats.
    pub fn to_json_line(&self) -> String {
        let params: Vec<String> = self
            .params
            .values
            .iter()
            .map(|v| match v {
                ParamValue::Index(ix) => ix.to_string(),
                ParamValue::Real(r) => fmt_f64(*r),
            })
            .collect();
        format!(
            "{{\"run_id\":{},\"optimizer\":{},\"problem\":{},\"seed\":{},\"trial\":{},\"params\":[{}],\"value\":{},\"best_value\":{}}}",
            json_string(&self.run_id),
            json_string(&self.optimizer),
            json_string(&self.problem),
            self.seed,
            self.trial,
            params.join(","),
            fmt_f64(self.value),
            fmt_f64(self.best_value),
        )
    }

    /// Parses one log line; `line` is its 1-based position, used in errors.
    pub fn from_json_line(text: &str, line: usize) -> Result<TrialRecord, RecordError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| RecordError::Json { line, source })?;
        let field = |name: &'static str| RecordError::Field { line, field: name };
        let get_str = |name: &'static str| -> Result<String, RecordError> {
            Ok(value
                .get(name)
                .and_then(|v| v.as_str())
                .ok_or_else(|| field(name))?
                .to_string())
        };
        let get_f64 = |name: &'static str| -> Result<f64, RecordError> {
            value
                .get(name)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| field(name))
        };
        let params = value
            .get("params")
            .and_then(|v| v.as_array())
            .ok_or_else(|| field("params"))?
            .iter()
            .map(|v| {
                if let Some(ix) = v.as_u64() {
                    Some(ParamValue::Index(ix as usize))
                } else {
                    v.as_f64().map(ParamValue::Real)
                }
            })
            .collect::<Option<Vec<ParamValue>>>()
            .ok_or_else(|| field("params"))?;
        Ok(TrialRecord {
            run_id: get_str("run_id")?,
            optimizer: get_str("optimizer")?,
            problem: get_str("problem")?,
            seed: value
                .get("seed")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| field("seed"))?,
            trial: value
                .get("trial")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| field("trial"))? as usize,
            params: ParamVector::new(params),
            value: get_f64("value")?,
            best_value: get_f64("best_value")?,
        })
    }
}

/// Serializes records to JSON-lines text (one object per line).
pub fn to_jsonl(records: &[TrialRecord]) -> String {
    let mut text = String::new();
    for record in records {
        text.push_str(&record.to_json_line());
        text.push('\n');
    }
    text
}

/// Reads a JSON-lines trial log, ignoring blank lines.
pub fn read_trial_log(path: &Path) -> Result<Vec<TrialRecord>, RecordError> {
    let text = std::fs::read_to_string(path).map_err(|source| RecordError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ix, l)| TrialRecord::from_json_line(l, ix + 1))
        .collect()
}
