//! Output formatting shared by the commands.
//!
//! Every command is a pure function of its configuration, seed, and input
//! files: floats are printed with 17 significant digits (round-trippable)
//! and no timestamps enter any file, so reruns overwrite byte-identically.

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Create the parent directory of `path` if it is missing.
pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

/// 17 significant digits; `f64::from_str` recovers the exact value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular table with named columns, writable as CSV or JSON rows.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let objects: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let map: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let value = v
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map(serde_json::Value::Number)
                            .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                        (c.clone(), value)
                    })
                    .collect();
                serde_json::Value::Object(map)
            })
            .collect();
        serde_json::to_string_pretty(&objects).expect("table rows are serializable")
    }

    /// Render in `format` ("csv" or "json") and write to `path`, or to
    /// stdout when no path is given.
    pub fn write(&self, path: Option<&Path>, format: &str) -> CliResult<()> {
        let body = match format {
            "csv" => self.to_csv(),
            "json" => self.to_json(),
            other => return Err(CliError::Config(format!("unknown format `{other}`"))),
        };
        match path {
            Some(p) => {
                ensure_parent(p)?;
                fs::write(p, body)?;
            }
            None => print!("{body}"),
        }
        Ok(())
    }
}
