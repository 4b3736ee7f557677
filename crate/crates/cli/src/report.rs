//! Tabular output. CSV files open with `#` comment lines carrying the tool
//! version, the schema version and a digest of the resolved config.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, Resolved};

pub const SCHEMA_VERSION: &str = "symnet-table/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(fmt_f64(*x)),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest decimal string that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // Debug switches to exponent form for very large and small magnitudes
        format!("{x:?}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub digest: String,
    pub config: Value,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

pub fn config_digest<T: Serialize>(cfg: &T) -> String {
    let text = serde_json::to_string(cfg).expect("config serializes");
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Report {
    pub fn new(command: &str, cfg: &Resolved) -> Self {
        Self {
            command: command.into(),
            digest: config_digest(cfg),
            config: serde_json::to_value(cfg).expect("config serializes"),
            notes: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# symnet {TOOL_VERSION}");
        let _ = writeln!(s, "# schema: {SCHEMA_VERSION}");
        let _ = writeln!(s, "# config-sha256: {}", self.digest);
        let _ = writeln!(s, "# command: {}", self.command);
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        s
    }

    fn csv_table(t: &Table, out: &mut String) {
        let _ = writeln!(out, "{}", t.columns.join(","));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }

    /// All tables in one document.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.header();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        s.push('\n');
                    }
                    let _ = writeln!(s, "# table: {}", t.name);
                    Self::csv_table(t, &mut s);
                }
                s
            }
            Format::Json => {
                let doc = json!({
                    "tool": "symnet",
                    "version": TOOL_VERSION,
                    "schema": SCHEMA_VERSION,
                    "config_sha256": self.digest,
                    "command": self.command,
                    "config": self.config,
                    "notes": self.notes,
                    "tables": self.tables.iter().map(|t| json!({
                        "name": t.name,
                        "columns": t.columns,
                        "rows": t.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    /// One document per table, for commands that write a file per table.
    pub fn render_each(&self, format: Format) -> Vec<(String, String)> {
        self.tables
            .iter()
            .map(|t| {
                let single = Report {
                    tables: vec![t.clone()],
                    ..self.clone()
                };
                let body = match format {
                    Format::Csv => {
                        let mut s = single.header();
                        Self::csv_table(t, &mut s);
                        s
                    }
                    Format::Json => single.render(Format::Json),
                };
                (t.name.clone(), body)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 0.75, 1.0 / 3.0, 1e-300, 6.02e23, -2.5e-7, 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        assert_eq!(Cell::text("a,b").csv(), "\"a,b\"");
    }
}
