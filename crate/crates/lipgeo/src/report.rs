//! The `lipgeo-report/1` JSON document emitted by batch runs, plus its
//! structural validator and a human-readable summary renderer. The
//! `generated_unix_ms` field is the one part excluded from determinism
//! comparisons.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_ID: &str = "lipgeo-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Ok,
    Error,
    Mismatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub index: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub details: Value,
    #[serde(default)]
    pub curves: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub seed: u64,
    pub generated_unix_ms: u64,
    pub config: Value,
    pub tasks: Vec<TaskRecord>,
}

impl Report {
    pub fn new(seed: u64, config: Value) -> Self {
        Report {
            schema: SCHEMA_ID.to_string(),
            seed,
            generated_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            config,
            tasks: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Any task errored?
    pub fn has_errors(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskStatus::Error)
    }

    /// Any verdict-bearing task disagreeing with its declared expectation?
    pub fn has_mismatches(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskStatus::Mismatch)
    }
}

/// Structural validation against the published schema. Returns the list of
/// violations (empty = valid).
pub fn validate_report(value: &Value) -> Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let obj = match value.as_object() {
        Some(o) => o,
        None => return Err(vec!["report must be a JSON object".into()]),
    };
    match obj.get("schema").and_then(Value::as_str) {
        Some(s) if s == SCHEMA_ID => {}
        Some(s) => problems.push(format!("schema is `{s}`, expected `{SCHEMA_ID}`")),
        None => problems.push("missing string field `schema`".into()),
    }
    if !obj.get("seed").map(Value::is_u64).unwrap_or(false) {
        problems.push("missing integer field `seed`".into());
    }
    if !obj.get("generated_unix_ms").map(Value::is_u64).unwrap_or(false) {
        problems.push("missing integer field `generated_unix_ms`".into());
    }
    if obj.get("config").is_none() {
        problems.push("missing field `config`".into());
    }
    match obj.get("tasks").and_then(Value::as_array) {
        None => problems.push("missing array field `tasks`".into()),
        Some(tasks) => {
            for (i, t) in tasks.iter().enumerate() {
                let t = match t.as_object() {
                    Some(t) => t,
                    None => {
                        problems.push(format!("task {i} is not an object"));
                        continue;
                    }
                };
                if !t.get("index").map(Value::is_u64).unwrap_or(false) {
                    problems.push(format!("task {i}: missing `index`"));
                }
                if !t.get("kind").map(Value::is_string).unwrap_or(false) {
                    problems.push(format!("task {i}: missing `kind`"));
                }
                match t.get("status").and_then(Value::as_str) {
                    Some("ok" | "error" | "mismatch") => {}
                    _ => problems.push(format!("task {i}: status must be ok|error|mismatch")),
                }
                if t.get("details").is_none() {
                    problems.push(format!("task {i}: missing `details`"));
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

/// Copy with the timestamp zeroed, for byte comparisons across runs.
pub fn without_timestamp(value: &Value) -> Value {
    let mut v = value.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.insert("generated_unix_ms".into(), Value::from(0u64));
    }
    v
}

/// One line per task, suitable for a terminal or a log.
pub fn render_summary(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} (seed {})\n", report.schema, report.seed));
    for t in &report.tasks {
        let status = match t.status {
            TaskStatus::Ok => "ok",
            TaskStatus::Error => "ERROR",
            TaskStatus::Mismatch => "MISMATCH",
        };
        let set = t.set.as_deref().unwrap_or("-");
        let mut line = format!("[{}] {:18} {:24} {}", t.index, t.kind, set, status);
        if let Some(v) = &t.verdict {
            line.push_str(&format!(" verdict={v}"));
            if let Some(e) = &t.expected {
                line.push_str(&format!(" expected={e}"));
            }
        }
        if let Some(e) = &t.error {
            line.push_str(&format!(" ({e})"));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}
