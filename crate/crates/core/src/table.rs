//! Plain tables rendered as TSV or as aligned text.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.headers).chain(&self.rows) {
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Space-padded columns, numbers right-aligned.
    pub fn to_aligned(&self) -> String {
        let ncol = self.headers.len();
        let mut widths = vec![0; ncol];
        for line in std::iter::once(&self.headers).chain(&self.rows) {
            for (w, cell) in widths.iter_mut().zip(line) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for (i, line) in std::iter::once(&self.headers).chain(&self.rows).enumerate() {
            for (j, cell) in line.iter().enumerate() {
                if j > 0 {
                    out.push_str("  ");
                }
                let numeric = i > 0 && cell.parse::<f64>().is_ok();
                if numeric {
                    let _ = write!(out, "{cell:>width$}", width = widths[j]);
                } else if j + 1 == ncol {
                    out.push_str(cell);
                } else {
                    let _ = write!(out, "{cell:<width$}", width = widths[j]);
                }
            }
            out.push('\n');
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * ncol.saturating_sub(1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Fixed-precision rendering used across reports.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}
