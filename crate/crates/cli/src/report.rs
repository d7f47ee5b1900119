use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// The output of one command run.
///
/// Rendered as a TOML document (the default) or as `key: value` lines
/// (`--plain`). Rationals are written as `p/q` strings, scores in scientific
/// notation with the significant digits given by `precision`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub seed: Option<u64>,
    pub precision: Option<u32>,
    pub results: Table,
    pub warnings: Vec<String>,
    /// Internal consistency checks that did not hold. Non-empty means a bug.
    pub failed_checks: Vec<String>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, inputs_digest: String) -> Self {
        RunReport {
            command: command.into(),
            inputs_digest,
            seed: None,
            precision: None,
            results: Table::new(),
            warnings: Vec::new(),
            failed_checks: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.results.get(key)
    }

    /// A string result, for callers that want to check a value.
    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Value::as_str)
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn fail_check(&mut self, message: impl Into<String>) {
        self.failed_checks.push(message.into());
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_checks.is_empty() {
            0
        } else {
            4
        }
    }

    pub fn to_toml(&self) -> String {
        let mut doc = Table::new();
        doc.insert("command".into(), self.command.clone().into());
        doc.insert("inputs_digest".into(), self.inputs_digest.clone().into());
        if let Some(seed) = self.seed {
            doc.insert("seed".into(), Value::Integer(seed as i64));
        }
        if let Some(p) = self.precision {
            doc.insert("precision".into(), Value::Integer(p.into()));
        }
        doc.insert("warnings".into(), strings(&self.warnings));
        doc.insert("failed_checks".into(), strings(&self.failed_checks));
        doc.insert("results".into(), Value::Table(self.results.clone()));
        toml::to_string(&doc).expect("report tables serialize")
    }

    pub fn to_plain(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "inputs digest: {}", self.inputs_digest);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        if let Some(p) = self.precision {
            let _ = writeln!(out, "precision: {p} digits");
        }
        plain_table(&mut out, "", &self.results);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for f in &self.failed_checks {
            let _ = writeln!(out, "CHECK FAILED: {f}");
        }
        out
    }
}

pub fn strings<S: ToString>(items: &[S]) -> Value {
    Value::Array(items.iter().map(|s| Value::String(s.to_string())).collect())
}

fn plain_table(out: &mut String, prefix: &str, table: &Table) {
    for (key, value) in table {
        let name = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        plain_value(out, &name, value);
    }
}

fn plain_value(out: &mut String, name: &str, value: &Value) {
    match value {
        Value::Table(t) => plain_table(out, name, t),
        Value::Array(items) if items.iter().any(|v| v.is_table()) => {
            for (i, v) in items.iter().enumerate() {
                plain_value(out, &format!("{name}[{i}]"), v);
            }
        }
        other => {
            let _ = writeln!(out, "{name}: {}", plain_scalar(other));
        }
    }
}

fn plain_scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(plain_scalar).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

/// SHA-256 over the length-prefixed parts, hex encoded.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    format!("sha256:{:x}", hasher.finalize())
}
