//! Report emission: JSON or CSV, with provenance, byte-stable for identical inputs.
//!
//! Floats are written in shortest round-trip form, object keys keep their
//! declaration order, and nothing time- or host-dependent is recorded.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{config_err, Error, Result};

pub const GENERATOR: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    generator: &'static str,
    version: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// The body as a JSON object with `generator`, `version` and `config_hash` prepended.
pub fn with_provenance<T: Serialize>(body: &T, config_hash: &str) -> Result<Value> {
    Ok(serde_json::to_value(Envelope { generator: GENERATOR, version: VERSION, config_hash, body })?)
}

pub fn render_json(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if !s.contains([',', '"', '\n']) => s.clone(),
        Value::String(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        other => format!("\"{}\"", other.to_string().replace('"', "\"\"")),
    }
}

/// One header line with the object's keys and one row with its values.
/// Nested values are embedded as quoted compact JSON.
pub fn object_to_csv(value: &Value) -> Result<String> {
    let obj = value.as_object().ok_or_else(|| Error::Config("CSV output needs a JSON object".into()))?;
    let header: Vec<&str> = obj.keys().map(String::as_str).collect();
    let row: Vec<String> = obj.values().map(csv_cell).collect();
    Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
}

/// A table from rows of JSON objects sharing the same keys.
pub fn rows_to_csv(rows: &[Value]) -> Result<String> {
    let Some(first) = rows.first().and_then(Value::as_object) else {
        return config_err("CSV table needs at least one object row");
    };
    let keys: Vec<&String> = first.keys().collect();
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in rows {
        let obj = r.as_object().ok_or_else(|| Error::Config("CSV rows must be objects".into()))?;
        let cells: Vec<String> = keys.iter().map(|k| obj.get(*k).map(csv_cell).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Serialize)]
    struct Body {
        #[serde(rename = "T1")]
        t1: f64,
        note: String,
    }

    #[test]
    fn provenance_comes_first() {
        let v = with_provenance(&Body { t1: 0.1, note: "a,b".into() }, "abc").unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["generator", "version", "config_hash", "T1", "note"]);
        let csv = object_to_csv(&v).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "generator,version,config_hash,T1,note");
        assert!(lines.next().unwrap().ends_with(",0.1,\"a,b\""));
    }

    #[test]
    fn shortest_round_trip_floats() {
        let x = 0.1 + 0.2;
        let s = render_json(&json!({ "x": x })).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), x);
        assert!(s.contains("0.30000000000000004"));
    }

    #[test]
    fn table_rows() {
        let rows = vec![json!({"g": 1.0, "E": -0.5}), json!({"g": 2.0, "E": -1.5})];
        assert_eq!(rows_to_csv(&rows).unwrap(), "g,E\n1.0,-0.5\n2.0,-1.5\n");
        assert!(rows_to_csv(&[]).is_err());
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.json");
        write_text(Some(&p), "{}\n").unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "{}\n");
    }
}
