//! Experiment summaries: named pass/fail checks and one result table.
//!
//! `summary.json` holds the whole [`Summary`]; `summary.csv` holds only the
//! table, with the header row listing `columns` in order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::record::encode_f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub master_seed: u64,
    pub records: usize,
    pub checks: Vec<Check>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Further scalar results, such as fitted parameters.
    pub notes: BTreeMap<String, Value>,
}

impl Summary {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn note(&mut self, key: &str, v: f64) {
        self.notes.insert(key.into(), encode_f64(v));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("summaries always serialize");
        std::fs::write(path, text + "\n").map_err(CliError::io(path))
    }

    pub fn write_csv(&self, w: impl std::io::Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(cell_text))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `v` as a table cell; non-finite values become strings.
pub fn cell(v: f64) -> Value {
    encode_f64(v)
}
