//! Machine-readable command reports.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "ap-corona/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A definitive negative answer: a refusal, a witness, a rejection.
    Negative,
    /// Nothing found within the search limits; nothing is claimed.
    Inconclusive,
    Error,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok | Status::Inconclusive => 0,
            Status::Negative => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    pub status: Status,
    /// `certified-periodic`, `heuristic` or `exact`; absent when no numerics ran.
    pub mode: Option<String>,
    pub result: Value,
    pub residuals: Value,
    pub error: Option<ErrorInfo>,
    pub wall_time_ms: f64,
}

impl Report {
    /// Report for a failure before the command could run.
    pub fn failure(command: &str, code: &str, message: impl Into<String>) -> Self {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            inputs: Value::Object(Default::default()),
            status: Status::Error,
            mode: None,
            result: Value::Object(Default::default()),
            residuals: Value::Object(Default::default()),
            error: Some(ErrorInfo { code: code.to_string(), message: message.into() }),
            wall_time_ms: 0.0,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Short human-readable form: one `key: value` line per result field.
    pub fn to_text(&self) -> String {
        let status = serde_json::to_value(self.status).expect("status serializes");
        let mut out = format!("{} {}", self.command, status.as_str().unwrap_or("?"));
        if let Some(mode) = &self.mode {
            out.push_str(&format!(" ({mode})"));
        }
        out.push('\n');
        if let Some(e) = &self.error {
            out.push_str(&format!("  error [{}]: {}\n", e.code, e.message));
        }
        for section in [&self.result, &self.residuals] {
            if let Value::Object(map) = section {
                for (k, v) in map {
                    let shown = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    out.push_str(&format!("  {k}: {shown}\n"));
                }
            }
        }
        out.push_str(&format!("  wall_time_ms: {:.3}\n", self.wall_time_ms));
        out
    }
}
