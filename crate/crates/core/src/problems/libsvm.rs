//! LIBSVM sparse text format.
//!
//! One sample per line, `<label> <idx>:<val> ...`, 1-based strictly increasing
//! indices, `#` to end of line is a comment. Labels `+1`/`1` map to `+1`;
//! `-1`, `0` and `2` map to `-1`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub label: f64,
    /// 0-based feature indices, strictly increasing.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, &v)| v * x[j])
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<SparseRow>,
    pub dim: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at `indices`, in the given order, with the same dimension.
    pub fn subset(&self, indices: &[usize]) -> SparseDataset {
        SparseDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            dim: self.dim,
        }
    }

    /// Rows with label `+1` and `−1` as a pair of counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let pos = self.rows.iter().filter(|r| r.label > 0.0).count();
        (pos, self.rows.len() - pos)
    }
}

fn parse_label(token: &str) -> std::result::Result<f64, String> {
    let v: f64 = token
        .parse()
        .map_err(|_| format!("invalid label {token:?}"))?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 || v == 2.0 {
        Ok(-1.0)
    } else {
        Err(format!("unsupported label {token:?}"))
    }
}

pub fn parse_libsvm(text: &str) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut dim = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or_default()).map_err(err)?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected <index>:<value>, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices start at 1".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("invalid feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value {val}")));
            }
            if indices.last().is_some_and(|&last| idx - 1 <= last) {
                return Err(err(format!(
                    "feature index {idx} is not strictly increasing"
                )));
            }
            indices.push(idx - 1);
            values.push(val);
        }
        if let Some(&last) = indices.last() {
            dim = dim.max(last + 1);
        }
        rows.push(SparseRow {
            label,
            indices,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no samples found".into(),
        });
    }
    Ok(SparseDataset { rows, dim })
}

pub fn read_libsvm_file(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read dataset {}: {e}", path.display())))?;
    parse_libsvm(&text)
}

/// Inverse of [`parse_libsvm`] on parsed data (labels written as `+1`/`-1`).
pub fn to_libsvm_string(data: &SparseDataset) -> String {
    let mut out = String::new();
    for row in &data.rows {
        out.push_str(if row.label > 0.0 { "+1" } else { "-1" });
        for (&j, &v) in row.indices.iter().zip(&row.values) {
            // `{:?}` prints the shortest representation that round-trips
            let _ = write!(out, " {}:{:?}", j + 1, v);
        }
        out.push('\n');
    }
    out
}
