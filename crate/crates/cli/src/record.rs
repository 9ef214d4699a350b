//! Machine records and the tables rendered from them.
//!
//! A record is one line: its kind followed by `key=value` pairs. Floats are
//! written with 17 significant digits so they parse back to the same bits.
//! Tables are drawn from the same records, so every number shown in a table
//! also appears in the record output.

use std::fmt::{self, Write as _};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Value {
    fn machine(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn human(&self) -> String {
        match self {
            Value::Float(x) => format_short(*x),
            other => other.machine(),
        }
    }
}

/// 17 significant digits, or the IEEE special name.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Six significant digits for tables.
fn format_short(x: f64) -> String {
    if !x.is_finite() {
        return format_float(x);
    }
    let magnitude = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&magnitude) {
        let decimals = if x == 0.0 {
            1
        } else {
            (5 - magnitude.log10().floor() as i32).max(0) as usize
        };
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            let trimmed = s.trim_end_matches('0');
            trimmed
                .strip_suffix('.')
                .map_or(trimmed.to_string(), |t| format!("{t}.0"))
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((mantissa, exp)) if mantissa.contains('.') => {
                let m = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{exp}")
            }
            _ => s,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Int(n)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Int(n as u64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.fields.push((key.into(), value.into()));
        self
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        for (key, value) in &self.fields {
            write!(f, " {key}={}", value.machine())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Records,
}

pub fn render(records: &[Record], format: Format) -> String {
    match format {
        Format::Records => records.iter().map(|r| format!("{r}\n")).collect(),
        Format::Table => render_table(records),
    }
}

fn render_table(records: &[Record]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < records.len() {
        // Consecutive records of one kind with the same keys form a grid.
        let kind = &records[i].kind;
        let keys: Vec<&str> = records[i].fields.iter().map(|(k, _)| k.as_str()).collect();
        let mut j = i + 1;
        while j < records.len()
            && &records[j].kind == kind
            && records[j]
                .fields
                .iter()
                .map(|(k, _)| k.as_str())
                .eq(keys.iter().copied())
        {
            j += 1;
        }
        if j - i > 1 {
            grid(&mut out, &records[i..j]);
        } else {
            block(&mut out, &records[i]);
        }
        out.push('\n');
        i = j;
    }
    out
}

fn block(out: &mut String, record: &Record) {
    let _ = writeln!(out, "[{}]", record.kind);
    let width = record
        .fields
        .iter()
        .map(|(k, _)| k.len())
        .max()
        .unwrap_or(0);
    for (key, value) in &record.fields {
        let _ = writeln!(out, "  {key:<width$}  {}", value.human());
    }
}

fn grid(out: &mut String, rows: &[Record]) {
    let _ = writeln!(out, "[{}]", rows[0].kind);
    let header: Vec<&str> = rows[0].fields.iter().map(|(k, _)| k.as_str()).collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.fields.iter().map(|(_, v)| v.human()).collect())
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            cells
                .iter()
                .map(|row| row[c].chars().count())
                .chain(std::iter::once(header[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |items: Vec<&str>| -> String {
        let padded: Vec<String> = items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        format!("  {}", padded.join("  "))
    };
    let _ = writeln!(out, "{}", line(header.clone()));
    for row in &cells {
        let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
    }
}
