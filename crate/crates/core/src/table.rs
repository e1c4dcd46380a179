//! CSV helpers shared by every exported artifact.
//!
//! Reals are written with 17 significant digits so a value read back is
//! bit-identical to the one written.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `node_id,<names...>` with one row per node in ascending id order.
pub fn write_columns<F>(names: &[&str], rows: usize, value: F) -> String
where
    F: Fn(usize, usize) -> f64,
{
    let mut out = String::from("node_id");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for v in 0..rows {
        let _ = write!(out, "{v}");
        for c in 0..names.len() {
            out.push(',');
            out.push_str(&fmt_real(value(c, v)));
        }
        out.push('\n');
    }
    out
}

/// A parsed CSV with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::format("csv", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::format("csv", e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format("csv", format!("missing column `{name}`")))
    }

    pub fn parse_cell<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| {
            Error::format(
                "csv",
                format!("row {}: cannot parse `{cell}` in column `{}`", row + 1, self.header[col]),
            )
        })
    }

    /// Reads `node_id` plus one real column as a dense vector indexed by node
    /// id. Every id in `[0, n)` must appear exactly once.
    pub fn dense_column(&self, name: &str) -> Result<Vec<f64>> {
        let id_col = self.column("node_id")?;
        let val_col = self.column(name)?;
        let n = self.rows.len();
        let mut out = vec![f64::NAN; n];
        for r in 0..n {
            let id: usize = self.parse_cell(r, id_col)?;
            if id >= n || !out[id].is_nan() {
                return Err(Error::format("csv", format!("node ids must be a permutation of 0..{n}")));
            }
            out[id] = self.parse_cell(r, val_col)?;
        }
        Ok(out)
    }
}
