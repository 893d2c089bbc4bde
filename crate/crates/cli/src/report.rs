//! Tabular output with deterministic CSV and JSON encodings.
//!
//! Floats are written with 12 significant digits. CSV metadata goes into
//! `#`-prefixed comment lines: parameters before the header row, diagnostics
//! after the last data row.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<String>> for Cell {
    fn from(s: Option<String>) -> Self {
        s.map_or(Cell::Empty, Cell::Text)
    }
}

/// `x` formatted with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else if x == 0.0 {
        // drops the sign of -0.0
        "0.00000000000e0".to_owned()
    } else {
        format!("{x:.11e}")
    }
}

impl Cell {
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => {
                fmt_num(*x).parse::<f64>().ok().and_then(Number::from_f64).map_or(Value::Null, Value::Number)
            }
            Cell::Int(i) => Value::Number((*i).into()),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub params: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Vec<(String, Cell)>,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Cell>) {
        self.params.push((key.to_owned(), value.into()));
    }

    pub fn diag(&mut self, key: &str, value: impl Into<Cell>) {
        self.diagnostics.push((key.to_owned(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {} {} {}", env!("CARGO_BIN_NAME"), env!("CARGO_PKG_VERSION"), self.command)?;
        for (k, v) in &self.params {
            writeln!(out, "# {k} = {}", v.to_csv())?;
        }
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut *out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::to_csv))?;
            }
            w.flush()?;
        }
        for (k, v) in &self.diagnostics {
            writeln!(out, "# {k} = {}", v.to_csv())?;
        }
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        let obj = |pairs: &[(String, Cell)]| {
            Value::Object(pairs.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<Map<_, _>>())
        };
        let rows = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns.iter().zip(row).map(|(k, v)| (k.clone(), v.to_json())).collect::<Map<_, _>>(),
                )
            })
            .collect();
        let mut top = Map::new();
        top.insert("tool".into(), Value::String(env!("CARGO_BIN_NAME").into()));
        top.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("params".into(), obj(&self.params));
        top.insert("columns".into(), Value::Array(self.columns.iter().cloned().map(Value::String).collect()));
        top.insert("rows".into(), Value::Array(rows));
        top.insert("diagnostics".into(), obj(&self.diagnostics));
        serde_json::to_writer_pretty(&mut *out, &Value::Object(top))?;
        writeln!(out)?;
        Ok(())
    }
}
