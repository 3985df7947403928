//! Fixed-precision tabular output shared by the reports and exports.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decimals used for percentage tables.
pub const PCT_DECIMALS: usize = 2;
/// Decimals used for measure series and error metrics.
pub const VALUE_DECIMALS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Jsonl,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "jsonl" => Ok(ExportFormat::Jsonl),
            other => Err(Error::Config(format!("unknown export format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    /// A real number printed with a fixed number of decimals.
    Num(f64, usize),
    Null,
}

impl Cell {
    pub fn pct(v: f64) -> Self {
        Cell::Num(v, PCT_DECIMALS)
    }

    pub fn value(v: f64) -> Self {
        Cell::Num(v, VALUE_DECIMALS)
    }

    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v, p) => format!("{v:.p$}"),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Str(s) => serde_json::Value::String(s.clone()).to_string(),
            Cell::Num(v, _) if !v.is_finite() => "null".into(),
            Cell::Null => "null".into(),
            other => other.text(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: ExportFormat, out: W) -> Result<()> {
        match format {
            ExportFormat::Csv => self.write_csv(out),
            ExportFormat::Jsonl => self.write_jsonl(out),
        }
    }

    pub fn render(&self, format: ExportFormat) -> String {
        let mut buf = Vec::new();
        self.write(format, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }

    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let keys: Vec<String> = self
            .columns
            .iter()
            .map(|c| serde_json::Value::String(c.clone()).to_string())
            .collect();
        for row in &self.rows {
            let fields: Vec<String> = keys.iter().zip(row).map(|(k, v)| format!("{k}:{}", v.json())).collect();
            writeln!(out, "{{{}}}", fields.join(",")).map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }
}
