//! Report assembly and JSON/CSV rendering.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A size or precision cap was reached; the result is partial.
    CapReached,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::CapReached => 2,
        }
    }
}

/// What a command hands back: its result, plus an optional table for CSV.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub table: Option<String>,
}

impl Outcome {
    pub fn ok(result: impl Serialize) -> Self {
        Outcome { status: Status::Ok, result: to_value(result), table: None }
    }

    pub fn with_status(status: Status, result: impl Serialize) -> Self {
        Outcome { status, result: to_value(result), table: None }
    }

    pub fn table(mut self, csv: String) -> Self {
        self.table = Some(csv);
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

pub fn render(command: &str, config: &Value, outcome: &Outcome, format: Format, elapsed: Duration) -> String {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let runtime_ms = elapsed.as_secs_f64() * 1e3;
    match format {
        Format::Json => {
            let doc = json!({
                "tool": "orbit-heights",
                "version": VERSION,
                "command": command,
                "status": outcome.status,
                "config": config,
                "result": outcome.result,
                "metadata": { "timestamp": timestamp, "runtime_ms": runtime_ms },
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("valid JSON");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!("# orbit-heights {VERSION} {command}\n");
            s.push_str(&format!("# status: {}\n", to_value(outcome.status).as_str().unwrap_or("")));
            s.push_str(&format!("# config: {config}\n"));
            match &outcome.table {
                Some(t) => s.push_str(t),
                None => s.push_str(&flatten_csv(&outcome.result)),
            }
            s.push_str(&format!("# metadata: timestamp={timestamp} runtime_ms={runtime_ms}\n"));
            s
        }
    }
}

/// `key,value` rows with dotted paths for nested fields.
fn flatten_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, val) in rows {
        out.push_str(&format!("{},{}\n", quote(&k), quote(&val)));
    }
    out
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                flatten(&join(k), val, rows);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), val, rows);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            rows.push((prefix.to_string(), parts.join(";")));
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
