//! Report envelope and artifact writing. Every JSON report carries the command,
//! the artifact version, the resolved configuration, the outcome of each check
//! and the command-specific result.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting, so CSV cells match the JSON values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// `(file stem suffix, SVG text)`.
    pub plots: Vec<(String, String)>,
    /// Other artifacts: `(file name suffix with extension, bytes)`.
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub enum Status<'a> {
    Done(&'a Outcome),
    Error { kind: &'a str, message: String },
}

/// Output directory: `--out`, else `LAVGAP_OUT`, else `lavgap-out`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os("LAVGAP_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("lavgap-out"),
    }
}

pub fn envelope(command: &str, config: &Value, status: &Status<'_>) -> Value {
    let (status_str, checks, result, error) = match status {
        Status::Done(o) => (
            if o.passed() { "pass" } else { "fail" },
            serde_json::to_value(&o.checks).unwrap_or(Value::Null),
            o.result.clone(),
            Value::Null,
        ),
        Status::Error { kind, message } => (
            "error",
            json!([]),
            Value::Null,
            json!({ "kind": kind, "message": message }),
        ),
    };
    json!({
        "command": command,
        "version": lavgap_core::VERSION,
        "config": config,
        "status": status_str,
        "checks": checks,
        "error": error,
        "result": result,
    })
}

/// Writes `<command>.json`, one CSV per table, one SVG per plot and the extra files. Returns the written paths.
pub fn write_artifacts(
    dir: &Path,
    command: &str,
    report: &Value,
    outcome: Option<&Outcome>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{command}.json"));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    written.push(json_path);
    if let Some(o) = outcome {
        for t in &o.tables {
            let path = dir.join(format!("{command}_{}.csv", t.name));
            let mut w = csv::Writer::from_path(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.flush()?;
            written.push(path);
        }
        for (name, svg) in &o.plots {
            let path = dir.join(format!("{command}_{name}.svg"));
            fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        for (name, bytes) in &o.files {
            let path = dir.join(format!("{command}_{name}"));
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_embeds_config_and_version() {
        let o = Outcome {
            checks: vec![Check::new("a", true, ""), Check::new("b", false, "x")],
            ..Default::default()
        };
        let v = envelope("demo", &json!({"p": 2.0}), &Status::Done(&o));
        assert_eq!(v["version"], lavgap_core::VERSION);
        assert_eq!(v["config"]["p"], 2.0);
        assert_eq!(v["status"], "fail");
        let e = envelope(
            "demo",
            &json!({}),
            &Status::Error {
                kind: "parameter",
                message: "bad".into(),
            },
        );
        assert_eq!(e["error"]["kind"], "parameter");
    }

    #[test]
    fn artifacts_are_written_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("rows", &["x", "y"]);
        t.push(vec![num(0.1), num(1.0 / 3.0)]);
        let o = Outcome {
            tables: vec![t],
            ..Default::default()
        };
        let v = envelope("demo", &json!({}), &Status::Done(&o));
        let a = write_artifacts(dir.path(), "demo", &v, Some(&o)).unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        write_artifacts(dir.path(), "demo", &v, Some(&o)).unwrap();
        let second: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(
            String::from_utf8(first[1].clone()).unwrap(),
            "x,y\n0.1,0.3333333333333333\n"
        );
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "").unwrap();
        assert!(write_artifacts(&file.join("sub"), "demo", &json!({}), None).is_err());
    }
}
