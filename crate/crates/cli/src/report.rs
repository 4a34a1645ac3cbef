use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{Format, RunSpec};

pub const SCHEMA: &str = "dixiecup/1";

/// Flat table behind `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Report under construction. Keys keep insertion order.
pub struct Report {
    spec: RunSpec,
    out: Option<PathBuf>,
    body: Map<String, Value>,
    errors: Vec<Value>,
    pub table: Table,
}

impl Report {
    pub fn new(spec: RunSpec, out: Option<PathBuf>) -> Self {
        Self {
            spec,
            out,
            body: Map::new(),
            errors: Vec::new(),
            table: Table::default(),
        }
    }

    pub fn spec(&self) -> &RunSpec {
        &self.spec
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.body.insert(key.to_string(), v);
    }

    pub fn error(&mut self, stage: &str, message: impl Display) {
        self.errors.push(json!({ "stage": stage, "message": message.to_string() }));
    }

    /// Unwrap `r`, recording the error under `stage` on failure.
    pub fn check<T, E: Display>(&mut self, stage: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(stage, e);
                None
            }
        }
    }

    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("schema".into(), Value::String(SCHEMA.into()));
        doc.insert("run".into(), serde_json::to_value(&self.spec).unwrap_or(Value::Null));
        for (k, v) in &self.body {
            doc.insert(k.clone(), v.clone());
        }
        doc.insert("errors".into(), Value::Array(self.errors.clone()));
        Value::Object(doc)
    }

    pub fn render(&self) -> anyhow::Result<Vec<u8>> {
        match self.spec.format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.to_json())?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.table.header)?;
                for row in &self.table.rows {
                    w.write_record(row)?;
                }
                Ok(w.into_inner()?)
            }
        }
    }

    /// Write the report to `--out` or stdout. CSV output sends errors to stderr.
    pub fn emit(&self) -> anyhow::Result<()> {
        let bytes = self.render()?;
        match &self.out {
            None => std::io::stdout().lock().write_all(&bytes)?,
            Some(path) => std::fs::write(path, &bytes)?,
        }
        if self.spec.format == Format::Csv {
            for e in &self.errors {
                eprintln!("error [{}]: {}", e["stage"].as_str().unwrap_or(""), e["message"].as_str().unwrap_or(""));
            }
        }
        Ok(())
    }
}

/// Number cell for CSV rows; empty for missing values.
pub fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Shortest round-trip decimal, with an exponent for very large or small values.
pub fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_default()
}

/// `a / b - 1`, or `None` when either side is missing.
pub fn rel_gap(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b - 1.0),
        _ => None,
    }
}
