use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn float_text(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float_text(*v),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Str(s) => serde_json::to_string(s).expect("string encodes"),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => float_text(*v),
            Cell::Float(_) => "null".into(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// Rows with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        if self.rows.is_empty() {
            writeln!(w, "[]")?;
            return Ok(());
        }
        writeln!(w, "[")?;
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = self
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| format!("{}: {}", serde_json::to_string(k).expect("key encodes"), v.json()))
                .collect();
            let sep = if i + 1 == self.rows.len() { "" } else { "," };
            writeln!(w, "  {{{}}}{sep}", fields.join(", "))?;
        }
        writeln!(w, "]")?;
        Ok(())
    }

    pub fn write(&self, format: Format, w: impl Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
            let mut w = io::BufWriter::new(f);
            table.write(format, &mut w)?;
            w.flush().with_context(|| format!("cannot write {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            table.write(format, stdout.lock())?;
        }
    }
    Ok(())
}
