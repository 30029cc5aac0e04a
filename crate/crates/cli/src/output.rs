//! Tables and sidecars. Every number is printed with 12 significant digits
//! so that reruns are byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => number(*v).parse::<f64>().ok().map_or(Value::Null, Value::from),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

/// A header of `name[unit]` columns and rows of cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = (S, &'static str)>) -> Self {
        Self {
            columns: columns.into_iter().map(|(name, unit)| format!("{}[{unit}]", name.into())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let wrap = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(wrap)?;
        }
        w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut bytes = serde_json::to_vec_pretty(&self.to_json()).expect("table serializes");
                bytes.push(b'\n');
                Ok(bytes)
            }
        }
    }
}

/// `<out>.json` next to the table.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Write the table to `out` (or stdout) and, with a file, its sidecar.
pub fn emit(table: &Table, format: Format, out: Option<&Path>, sidecar: &Value) -> Result<()> {
    let bytes = table.render(format)?;
    match out {
        Some(path) => {
            write_file(path, &bytes)?;
            let mut meta = serde_json::to_vec_pretty(sidecar).expect("sidecar serializes");
            meta.push(b'\n');
            write_file(&sidecar_path(path), &meta)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
