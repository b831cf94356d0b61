//! L2-regularized binary logistic regression over client data splits.
//!
//! With `M` rows in total and `n` clients,
//! `f_i(x) = (n/M) Σ_{rows of i} log(1 + exp(−y aᵀx)) + c‖x‖²`
//! so that `(1/n) Σ f_i` is the whole-dataset mean loss plus `c‖x‖²`.
//! The default `c` is `1/(2M)`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::libsvm::{SparseDataset, SparseRow};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::oracle::{ClientOracle, DistributedProblem, ProblemConstants};
use crate::rng::RandomStream;

/// Largest dimension for which the Gram matrix is formed densely.
const DENSE_GRAM_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LogisticOptions {
    /// Coefficient `c` of `c‖x‖²`; `None` means `1/(2M)`.
    pub regularization: Option<f64>,
    /// Minibatch size for stochastic gradients; `None` gives exact gradients.
    pub batch_size: Option<usize>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticOracle {
    rows: Arc<Vec<SparseRow>>,
    dim: usize,
    /// Multiplier on the summed loss (`n/M`).
    scale: f64,
    regularization: f64,
    batch_size: Option<usize>,
    smoothness: f64,
    variance: f64,
}

impl LogisticOracle {
    pub fn new(
        rows: Vec<SparseRow>,
        dim: usize,
        scale: f64,
        regularization: f64,
        batch_size: Option<usize>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("logistic client has no rows"));
        }
        if let Some(bad) = rows
            .iter()
            .flat_map(|r| r.indices.iter())
            .find(|&&j| j >= dim)
        {
            return Err(Error::Dimension {
                expected: dim,
                found: bad + 1,
            });
        }
        if batch_size == Some(0) {
            return Err(Error::config("batch_size must be at least 1"));
        }
        let lambda_max = gram_lambda_max(&rows, dim);
        let max_row_sq = rows.iter().map(|r| r.norm_sq()).fold(0.0, f64::max);
        let count = rows.len() as f64;
        // each sampled term is bounded by scale·M_i·‖a‖, so the minibatch
        // variance is at most that squared over the batch size
        let variance = batch_size.map_or(0.0, |b| (scale * count).powi(2) * max_row_sq / b as f64);
        Ok(Self {
            dim,
            scale,
            regularization,
            batch_size,
            smoothness: scale * lambda_max / 4.0 + 2.0 * regularization,
            variance,
            rows: Arc::new(rows),
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn accumulate(&self, g: &mut Vector, row: &SparseRow, x: &[f64], weight: f64) {
        let margin = row.label * row.dot(x);
        let coeff = -weight * row.label * sigmoid(-margin);
        for (&j, &v) in row.indices.iter().zip(&row.values) {
            g[j] += coeff * v;
        }
    }
}

impl ClientOracle for LogisticOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        let xs = x.as_slice();
        let loss: f64 = self
            .rows
            .iter()
            .map(|r| softplus(-r.label * r.dot(xs)))
            .sum();
        self.scale * loss + self.regularization * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let xs = x.as_slice();
        let mut g = x * (2.0 * self.regularization);
        for r in self.rows.iter() {
            self.accumulate(&mut g, r, xs, self.scale);
        }
        g
    }

    fn stochastic_gradient(&self, x: &Vector, stream: &mut RandomStream) -> Vector {
        let Some(b) = self.batch_size else {
            return self.gradient(x);
        };
        let xs = x.as_slice();
        let weight = self.scale * self.rows.len() as f64 / b as f64;
        let mut g = x * (2.0 * self.regularization);
        for _ in 0..b {
            let r = &self.rows[stream.next_index(self.rows.len())];
            self.accumulate(&mut g, r, xs, weight);
        }
        g
    }

    fn gradient_variance(&self) -> f64 {
        self.variance
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn convexity(&self) -> Option<f64> {
        Some(2.0 * self.regularization)
    }
}

/// `λ_max(Σ a aᵀ)`: dense eigen-solve for small `d`, otherwise power
/// iteration inflated by 5% to stay an upper bound in practice.
fn gram_lambda_max(rows: &[SparseRow], dim: usize) -> f64 {
    if dim <= DENSE_GRAM_LIMIT {
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        for r in rows {
            for (&j, &vj) in r.indices.iter().zip(&r.values) {
                for (&k, &vk) in r.indices.iter().zip(&r.values) {
                    gram[(j, k)] += vj * vk;
                }
            }
        }
        return SymmetricEigen::new(gram).eigenvalues.max().max(0.0);
    }
    let mut v = Vector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..200 {
        let mut w = Vector::zeros(dim);
        for r in rows {
            let t = r.dot(v.as_slice());
            for (&j, &vj) in r.indices.iter().zip(&r.values) {
                w[j] += t * vj;
            }
        }
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = norm;
        v = w / norm;
    }
    1.05 * estimate
}

/// One logistic client per part; also attaches a whole-dataset oracle for `f`.
pub fn logistic_problem(
    parts: &[SparseDataset],
    options: LogisticOptions,
) -> Result<DistributedProblem> {
    if parts.is_empty() {
        return Err(Error::config("at least one client part is required"));
    }
    let dim = parts.iter().map(|p| p.dim).max().unwrap_or(0);
    if dim == 0 {
        return Err(Error::config("dataset has no features"));
    }
    if let Some(i) = parts.iter().position(|p| p.is_empty()) {
        return Err(Error::config(format!("client part {i} is empty")));
    }
    let n = parts.len() as f64;
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let m = total as f64;
    let reg = options.regularization.unwrap_or(1.0 / (2.0 * m));
    if !(reg >= 0.0) {
        return Err(Error::config("regularization must be non-negative"));
    }

    let mut clients: Vec<Arc<dyn ClientOracle>> = Vec::with_capacity(parts.len());
    let mut smoothness: f64 = 0.0;
    let mut variance: f64 = 0.0;
    for p in parts {
        let o = LogisticOracle::new(p.rows.clone(), dim, n / m, reg, options.batch_size)?;
        smoothness = smoothness.max(o.smoothness);
        variance = variance.max(o.variance);
        clients.push(Arc::new(o));
    }
    let all_rows: Vec<SparseRow> = parts.iter().flat_map(|p| p.rows.iter().cloned()).collect();
    let global = LogisticOracle::new(all_rows, dim, 1.0 / m, reg, None)?;
    let constants = ProblemConstants {
        smoothness: Some(smoothness),
        global_smoothness: Some(global.smoothness),
        convexity: Some(2.0 * reg),
        gradient_variance: variance,
        value_lower_bound: Some(0.0),
    };
    let name = format!("logistic(n={},rows={total},d={dim})", parts.len());
    Ok(DistributedProblem::new(name, clients, constants).with_global(Arc::new(global)))
}
