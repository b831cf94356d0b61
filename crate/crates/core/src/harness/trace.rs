use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "rounds",
    "grad_evals",
    "f_gap",
    "grad_norm_sq",
    "dist_sq",
    "wall_ms",
];

/// One recorded point of a run. Missing quantities are `None` and written as
/// empty CSV fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub k: usize,
    pub rounds: usize,
    pub grad_evals: u64,
    pub f_gap: Option<f64>,
    pub grad_norm_sq: f64,
    pub dist_sq: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl RoundTrace {
    /// `f_gap` when known, otherwise `‖∇f‖²`.
    pub fn metric(&self) -> f64 {
        self.f_gap.unwrap_or(self.grad_norm_sq)
    }
}

pub fn write_trace_csv<W: Write>(out: W, traces: &[RoundTrace]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for t in traces {
        w.serialize(t).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::Contract(format!("writing trace: {e}")))?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<RoundTrace>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected trace header {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Contract(format!("trace csv: {e}"))
}

/// Smallest `rounds` whose metric is `≤ eps`.
pub fn rounds_to_target(traces: &[RoundTrace], eps: f64) -> Option<usize> {
    traces.iter().find(|t| t.metric() <= eps).map(|t| t.rounds)
}

/// Smallest `grad_evals` whose metric is `≤ eps`.
pub fn grad_evals_to_target(traces: &[RoundTrace], eps: f64) -> Option<u64> {
    traces
        .iter()
        .find(|t| t.metric() <= eps)
        .map(|t| t.grad_evals)
}
