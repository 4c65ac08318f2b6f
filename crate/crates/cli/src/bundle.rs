//! Result bundles: CSV tables plus a JSON metadata sidecar, and the reader
//! that parses them back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// C-style `%.12e`: twelve mantissa digits, signed exponent of at least two
/// digits, `nan`/`inf` spelled in lower case.
pub fn fmt_sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.unsigned_abs())
}

/// One CSV field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_sci(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(field: &str) -> Cell {
        match field.parse::<f64>() {
            Ok(v) => Cell::Num(v),
            Err(_) => Cell::Text(field.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a == b || (a.is_nan() && b.is_nan()),
            (Cell::Text(a), Cell::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        // store what the file will hold so a re-read compares equal
        Cell::parse(&fmt_sci(v))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn from_csv(name: &str, bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = csv::ReaderBuilder::new().from_reader(bytes);
        let header = r.headers().map_err(io_err)?.iter().map(str::to_string).collect();
        let mut table = Table::with_header(name, header);
        for rec in r.records() {
            let rec = rec.map_err(io_err)?;
            table.rows.push(rec.iter().map(Cell::parse).collect());
        }
        Ok(table)
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub wall_time_s: f64,
    pub verdict: Option<String>,
    pub exit_code: i32,
    pub tables: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
}

impl ResultBundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn csv_path(dir: &Path, command: &str, table: &str) -> PathBuf {
        dir.join(format!("{command}_{table}.csv"))
    }

    pub fn json_path(dir: &Path, command: &str) -> PathBuf {
        dir.join(format!("{command}.json"))
    }

    /// Writes every table and the sidecar; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        let cmd = &self.metadata.command;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = Self::csv_path(dir, cmd, &t.name);
            fs::write(&path, t.to_csv()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        let path = Self::json_path(dir, cmd);
        let mut json = serde_json::to_string_pretty(&self.metadata).map_err(io_err)?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(written)
    }

    pub fn read(dir: &Path, command: &str) -> Result<Self, CliError> {
        let path = Self::json_path(dir, command);
        let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let metadata: Metadata = serde_json::from_str(&text).map_err(io_err)?;
        let tables = metadata
            .tables
            .iter()
            .map(|name| {
                let p = Self::csv_path(dir, command, name);
                let bytes = fs::read(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Table::from_csv(name, &bytes)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { metadata, tables })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponents() {
        assert_eq!(fmt_sci(1.0), "1.000000000000e+00");
        assert_eq!(fmt_sci(-0.00123), "-1.230000000000e-03");
        assert_eq!(fmt_sci(6.02e23), "6.020000000000e+23");
        assert_eq!(fmt_sci(1e-300), "1.000000000000e-300");
        assert_eq!(fmt_sci(0.0), "0.000000000000e+00");
        assert_eq!(fmt_sci(f64::NAN), "nan");
        assert_eq!(fmt_sci(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new("demo", &["x", "flag"]);
        t.push(vec![std::f64::consts::PI.into(), "ok".into()]);
        t.push(vec![f64::NAN.into(), "singular".into()]);
        let bytes = t.to_csv().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text, "x,flag\n3.141592653590e+00,ok\nnan,singular\n");
        assert_eq!(Table::from_csv("demo", &bytes).unwrap(), t);
    }

    #[test]
    fn cells_hold_the_printed_value() {
        let c: Cell = (1.0 / 3.0).into();
        assert_eq!(c.as_f64(), Some(3.333333333333e-01));
    }
}
