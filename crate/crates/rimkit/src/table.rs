//! Delimited-text tables: a `#` comment preamble (description, column
//! glossary, notes, disclaimer), one header row, then data rows. LF line
//! endings, UTF-8, fixed 6-decimal floats, empty field for undefined values.

use std::fs;
use std::path::Path;

use anyhow::Context;

pub const DISCLAIMER: &str =
    "screening statistics: RIM is an impact metric, not a bias metric; values do not establish intent, misconduct or whistle-level responsibility";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub description: String,
    pub columns: Vec<(&'static str, &'static str)>,
    pub notes: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, description: &str, columns: &[(&'static str, &'static str)]) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            columns: columns.to_vec(),
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}: row width", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self) -> Vec<u8> {
        let mut out = String::new();
        let line = |s: &str| s.replace(['\n', '\r'], " ");
        out.push_str(&format!("# {}: {}\n", self.name, line(&self.description)));
        out.push_str(&format!("# {DISCLAIMER}\n"));
        for (c, d) in &self.columns {
            out.push_str(&format!("# column {c}: {}\n", line(d)));
        }
        for n in &self.notes {
            out.push_str(&format!("# note: {}\n", line(n)));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(c, _)| *c)).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        let mut bytes = out.into_bytes();
        bytes.extend(body);
        bytes
    }

    pub fn write_to(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(self.file_name());
        fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Fixed six-decimal rendering without a negative zero.
pub fn f6(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn opt6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

pub fn int(x: impl ToString) -> String {
    x.to_string()
}

/// Result of re-parsing one emitted table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub comments: Vec<String>,
}

/// Strict re-parse: UTF-8, LF only, a single header row, uniform width.
pub fn parse_table(bytes: &[u8]) -> Result<ParsedTable, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    if text.contains('\r') {
        return Err("CR line ending".into());
    }
    if !text.is_empty() && !text.ends_with('\n') {
        return Err("missing final newline".into());
    }
    let comments: Vec<String> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| format!("header: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err("empty header".into());
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| format!("row: {e}"))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(ParsedTable { header, rows, comments })
}
