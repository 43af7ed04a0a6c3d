//! Typed result tables with CSV and JSON persistence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder for a cell that does not apply to its row.
pub const NOT_APPLICABLE: &str = "n/a";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Real,
    Integer,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn real(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Real,
        }
    }

    pub fn integer(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Integer,
        }
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    #[serde(serialize_with = "serialize_real")]
    Real(f64),
    Text(String),
}

fn serialize_real<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_real(*x))
    }
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    pub fn na() -> Self {
        Cell::Text(NOT_APPLICABLE.into())
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Cell::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(raw: &str, kind: ColumnKind) -> Cell {
        match kind {
            ColumnKind::Real => raw.parse::<f64>().map(Cell::Real).unwrap_or_else(|_| Cell::Text(raw.into())),
            ColumnKind::Integer => raw.parse::<i64>().map(Cell::Int).unwrap_or_else(|_| Cell::Text(raw.into())),
            ColumnKind::Text => Cell::Text(raw.into()),
        }
    }

    fn conform(self, kind: ColumnKind) -> Cell {
        match (self, kind) {
            (Cell::Text(s), k) if k != ColumnKind::Text => Cell::parse(&s, k),
            (Cell::Int(i), ColumnKind::Real) => Cell::Real(i as f64),
            (c, _) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Input echo and provenance; carried by JSON output only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

fn io_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.into(),
        message: e.to_string(),
    }
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            manifest: None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Real values of a column; non-numeric cells become `None`.
    pub fn reals(&self, name: &str) -> Option<Vec<Option<f64>>> {
        Some(self.column(name)?.into_iter().map(Cell::as_real).collect())
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                actual: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    /// RFC 4180 CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let e = |e: csv::Error| io_err("<csv>", e);
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(e)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(e)?;
        }
        w.flush().map_err(|x| io_err("<csv>", x))
    }

    /// Reads CSV written by [`ResultTable::write_csv`]. Without a schema,
    /// column kinds are inferred from the cells.
    pub fn read_csv<R: Read>(input: R, schema: Option<&[Column]>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let e = |e: csv::Error| io_err("<csv>", e);
        let header: Vec<String> = r.headers().map_err(e)?.iter().map(String::from).collect();
        let mut raw: Vec<Vec<String>> = Vec::new();
        for rec in r.records() {
            raw.push(rec.map_err(e)?.iter().map(String::from).collect());
        }
        let columns = match schema {
            Some(s) => {
                if s.len() != header.len() || s.iter().zip(&header).any(|(c, h)| &c.name != h) {
                    return Err(Error::InvalidParameter("CSV header does not match the schema".into()));
                }
                s.to_vec()
            }
            None => header
                .iter()
                .enumerate()
                .map(|(i, name)| Column {
                    name: name.clone(),
                    kind: infer_kind(raw.iter().map(|row| row[i].as_str())),
                })
                .collect(),
        };
        let rows = raw
            .iter()
            .map(|row| row.iter().zip(&columns).map(|(v, c)| Cell::parse(v, c.kind)).collect())
            .collect();
        Ok(Self {
            columns,
            rows,
            manifest: None,
        })
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| io_err("<json>", e))?;
        out.write_all(b"\n").map_err(|e| io_err("<json>", e))
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let mut t: ResultTable = serde_json::from_reader(input).map_err(|e| io_err("<json>", e))?;
        for row in t.rows.iter_mut() {
            if row.len() != t.columns.len() {
                return Err(Error::DimensionMismatch {
                    expected: t.columns.len(),
                    actual: row.len(),
                });
            }
            for (cell, col) in row.iter_mut().zip(&t.columns) {
                *cell = std::mem::replace(cell, Cell::na()).conform(col.kind);
            }
        }
        Ok(t)
    }

    pub fn write(&self, format: TableFormat, out: impl Write) -> Result<()> {
        match format {
            TableFormat::Csv => self.write_csv(out),
            TableFormat::Json => self.write_json(out),
        }
    }

    /// Writes to `path`; I/O errors carry the path.
    pub fn write_to_path(&self, format: TableFormat, path: &Path) -> Result<()> {
        let name = path.display().to_string();
        let file = File::create(path).map_err(|e| io_err(&name, e))?;
        let mut buf = BufWriter::new(file);
        self.write(format, &mut buf).map_err(|e| relabel(e, &name))?;
        buf.flush().map_err(|e| io_err(&name, e))
    }

    pub fn read_from_path(format: TableFormat, path: &Path, schema: Option<&[Column]>) -> Result<Self> {
        let name = path.display().to_string();
        let file = File::open(path).map_err(|e| io_err(&name, e))?;
        let reader = BufReader::new(file);
        match format {
            TableFormat::Csv => Self::read_csv(reader, schema),
            TableFormat::Json => Self::read_json(reader),
        }
        .map_err(|e| relabel(e, &name))
    }
}

fn relabel(e: Error, path: &str) -> Error {
    match e {
        Error::Io { message, .. } => Error::Io {
            path: path.into(),
            message,
        },
        other => other,
    }
}

fn infer_kind<'a>(values: impl Iterator<Item = &'a str>) -> ColumnKind {
    let mut kind = None;
    for v in values {
        if v == NOT_APPLICABLE || v.starts_with("error") {
            continue;
        }
        let k = if v.parse::<i64>().is_ok() {
            ColumnKind::Integer
        } else if v.parse::<f64>().is_ok() {
            ColumnKind::Real
        } else {
            return ColumnKind::Text;
        };
        kind = Some(match (kind, k) {
            (None, k) => k,
            (Some(ColumnKind::Integer), ColumnKind::Integer) => ColumnKind::Integer,
            _ => ColumnKind::Real,
        });
    }
    kind.unwrap_or(ColumnKind::Text)
}
