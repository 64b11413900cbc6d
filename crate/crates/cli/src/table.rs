//! Result tables: CSV body plus a JSON sidecar.

use std::cmp::Ordering;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats carry 17 significant digits in scientific notation.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn order(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Float(a), Cell::Float(b)) => a.total_cmp(b),
            (Cell::Int(a), Cell::Float(b)) => (*a as f64).total_cmp(b),
            (Cell::Float(a), Cell::Int(b)) => a.total_cmp(&(*b as f64)),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            (Cell::Bool(a), Cell::Bool(b)) => a.cmp(b),
            _ => Ordering::Equal,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    /// Leading columns that identify a row; rows are sorted on them.
    pub key_columns: usize,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str], key_columns: usize) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            key_columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Stable lexicographic sort on the key columns.
    pub fn sort(&mut self) {
        let k = self.key_columns;
        self.rows.sort_by(|a, b| {
            a[..k]
                .iter()
                .zip(&b[..k])
                .map(|(x, y)| x.order(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

/// Paths of the two files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self {
            csv: dir.join(format!("{stem}.csv")),
            json: dir.join(format!("{stem}.json")),
        }
    }
}

/// Writes through a temporary file so a crash never leaves a truncated result.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn write_outputs(paths: &OutputPaths, table: &ResultTable, sidecar: &Value) -> io::Result<()> {
    write_atomic(&paths.csv, &table.to_csv()?)?;
    let json = serde_json::to_vec_pretty(sidecar).map_err(io::Error::other)?;
    write_atomic(&paths.json, &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(Cell::Float(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(-2.5).render(), "-2.5000000000000000e0");
        assert_eq!(Cell::Int(7).render(), "7");
        assert_eq!(Cell::Empty.render(), "");
        let x: f64 = Cell::Float(std::f64::consts::PI).render().parse().unwrap();
        assert_eq!(x, std::f64::consts::PI);
    }

    #[test]
    fn rows_sort_on_key_columns() {
        let mut t = ResultTable::new(&["alpha", "r", "value"], 2);
        t.push(vec![2.0.into(), 1usize.into(), 0.3.into()]);
        t.push(vec![0.5.into(), 3usize.into(), 0.1.into()]);
        t.push(vec![0.5.into(), 1usize.into(), 0.2.into()]);
        t.sort();
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,r,value");
        assert!(lines[1].starts_with("5.0000000000000000e-1,1,"));
        assert!(lines[2].starts_with("5.0000000000000000e-1,3,"));
        assert!(lines[3].starts_with("2.0000000000000000e0,1,"));
    }
}
