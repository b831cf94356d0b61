//! Hessian dissimilarity constants `δ_A` (averaged) and `δ_B` (bounded).
//!
//! With `h_i = f_i − f`, the problem has `δ_A`-AHD when
//! `(1/n) Σ ‖∇h_i(x) − ∇h_i(y)‖² ≤ δ_A² ‖x − y‖²` and `δ_B`-BHD when every
//! `‖∇h_i(x) − ∇h_i(y)‖ ≤ δ_B ‖x − y‖`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::quadratic::{check_symmetric, shared_basis, QuadraticClientSpec, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::oracle::DistributedProblem;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    /// Tight constants: `δ_A² = λ_max((1/n) Σ D_i²)`.
    Exact,
    /// `δ_A² = (1/n) Σ ‖D_i‖²`, an upper bound on the exact value.
    PaperFormula,
    /// Lower-bound estimate from random point pairs.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityReport {
    pub delta_a: f64,
    pub delta_b: f64,
    pub method: DeltaMethod,
}

/// Both closed-form variants for a quadratic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDissimilarity {
    pub exact: DissimilarityReport,
    pub paper_formula: DissimilarityReport,
}

impl QuadraticDissimilarity {
    pub fn get(&self, method: DeltaMethod) -> Option<DissimilarityReport> {
        match method {
            DeltaMethod::Exact => Some(self.exact),
            DeltaMethod::PaperFormula => Some(self.paper_formula),
            DeltaMethod::Sampled => None,
        }
    }
}

/// Closed-form `δ_A`, `δ_B` from `D_i = Ā_i − Ā`.
///
/// The sigmoid term is identical across clients and cancels in `h_i`, so only
/// the quadratic parts matter.
pub fn delta_exact_quadratic(specs: &[QuadraticClientSpec]) -> Result<QuadraticDissimilarity> {
    if specs.is_empty() {
        return Err(Error::config("at least one client is required"));
    }
    for spec in specs {
        for a in &spec.matrices {
            if let SymmetricMatrix::Dense(m) = a {
                check_symmetric(m)?;
            }
        }
    }
    let averaged: Vec<SymmetricMatrix> = specs.iter().map(|s| s.averaged_matrix()).collect();
    let n = averaged.len() as f64;

    let (delta_b, exact_sq, formula_sq) = if shared_basis(&averaged).is_some() {
        let eigs: Vec<Vector> = averaged.iter().map(|a| a.eigenvalues()).collect();
        let mean = linalg::mean(&eigs);
        let diffs: Vec<Vector> = eigs.iter().map(|e| e - &mean).collect();
        let norms: Vec<f64> = diffs.iter().map(|d| d.amax()).collect();
        let exact_sq = (0..mean.len())
            .map(|k| diffs.iter().map(|d| d[k] * d[k]).sum::<f64>() / n)
            .fold(0.0, f64::max);
        let formula_sq = norms.iter().map(|v| v * v).sum::<f64>() / n;
        (
            norms.iter().copied().fold(0.0, f64::max),
            exact_sq,
            formula_sq,
        )
    } else {
        let dense: Vec<DMatrix<f64>> = averaged.iter().map(|a| a.to_dense()).collect();
        let d = dense[0].nrows();
        let mut mean = DMatrix::zeros(d, d);
        for a in &dense {
            mean += a;
        }
        mean /= n;
        let mut second_moment = DMatrix::zeros(d, d);
        let mut delta_b: f64 = 0.0;
        let mut formula_sq = 0.0;
        for a in &dense {
            let diff = a - &mean;
            let norm = spectral_norm(&diff);
            delta_b = delta_b.max(norm);
            formula_sq += norm * norm;
            second_moment += &diff * &diff;
        }
        second_moment /= n;
        // symmetrize away rounding before the eigen solve
        let second_moment = (&second_moment + second_moment.transpose()) * 0.5;
        let exact_sq = SymmetricEigen::new(second_moment)
            .eigenvalues
            .max()
            .max(0.0);
        (delta_b, exact_sq, formula_sq / n)
    };
    Ok(QuadraticDissimilarity {
        exact: DissimilarityReport {
            delta_a: exact_sq.sqrt(),
            delta_b,
            method: DeltaMethod::Exact,
        },
        paper_formula: DissimilarityReport {
            delta_a: formula_sq.sqrt(),
            delta_b,
            method: DeltaMethod::PaperFormula,
        },
    })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.amax()
}

/// Largest AHD and BHD ratios seen over `n_pairs` random pairs `(x, y)`.
///
/// Pair `k` is drawn from `stream.fork(k)`, so the estimate for `N` pairs is
/// a prefix of the estimate for `N + 1` and never decreases in `N`.
pub fn delta_sampled(
    problem: &DistributedProblem,
    n_pairs: usize,
    stream: &RandomStream,
) -> DissimilarityReport {
    let d = problem.dim();
    let n = problem.num_clients();
    let mut delta_a_sq: f64 = 0.0;
    let mut delta_b: f64 = 0.0;
    for k in 0..n_pairs {
        let mut s = stream.fork(k as u64);
        let x = Vector::from_fn(d, |_, _| s.standard_normal());
        let y = Vector::from_fn(d, |_, _| s.standard_normal());
        let step_sq = linalg::dist_sq(&x, &y);
        if step_sq == 0.0 {
            continue;
        }
        // ∇h_i(x) − ∇h_i(y) = (∇f_i(x) − ∇f_i(y)) − mean over clients
        let diffs: Vec<Vector> = problem
            .clients()
            .iter()
            .map(|c| c.gradient(&x) - c.gradient(&y))
            .collect();
        let mean = linalg::mean(&diffs);
        let mut total = 0.0;
        for diff in &diffs {
            let sq = linalg::dist_sq(diff, &mean);
            total += sq;
            delta_b = delta_b.max((sq / step_sq).sqrt());
        }
        delta_a_sq = delta_a_sq.max(total / n as f64 / step_sq);
    }
    DissimilarityReport {
        delta_a: delta_a_sq.sqrt(),
        delta_b,
        method: DeltaMethod::Sampled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::quadratic::QuadraticInstance;

    fn diag_client(entries: &[f64]) -> QuadraticClientSpec {
        let d = entries.len();
        QuadraticClientSpec {
            matrices: vec![SymmetricMatrix::Dense(DMatrix::from_diagonal(
                &Vector::from_row_slice(entries),
            ))],
            centers: vec![Vector::zeros(d)],
            sigmoid_weight: 0.0,
        }
    }

    fn remark_specs() -> Vec<QuadraticClientSpec> {
        vec![
            diag_client(&[3.0, 2.0]),
            diag_client(&[-1.0, 1.0]),
            diag_client(&[-2.0, -3.0]),
        ]
    }

    #[test]
    fn remark_matrices() {
        let rep = delta_exact_quadratic(&remark_specs()).unwrap();
        assert!((rep.exact.delta_a - (14.0_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((rep.paper_formula.delta_a - (19.0_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((rep.exact.delta_b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_client_is_zero() {
        let rep = delta_exact_quadratic(&[diag_client(&[5.0, 1.0])]).unwrap();
        assert_eq!(rep.exact.delta_a, 0.0);
        assert_eq!(rep.exact.delta_b, 0.0);
    }

    #[test]
    fn opposite_rank_one_pair() {
        // D_1 = diag(1, 0) = −D_2 around Ā = diag(2, 2): D_i² = diag(1, 0)
        let rep =
            delta_exact_quadratic(&[diag_client(&[3.0, 2.0]), diag_client(&[1.0, 2.0])]).unwrap();
        assert!((rep.exact.delta_a - 1.0).abs() < 1e-12);
        assert!((rep.exact.delta_b - 1.0).abs() < 1e-12);
        assert!((rep.paper_formula.delta_a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_is_contract_violation() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let spec = QuadraticClientSpec {
            matrices: vec![SymmetricMatrix::Dense(m)],
            centers: vec![Vector::zeros(2)],
            sigmoid_weight: 0.0,
        };
        assert!(matches!(
            delta_exact_quadratic(&[spec]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sampled_brackets_exact_on_remark_instance() {
        let inst = QuadraticInstance::from_specs("remark", remark_specs(), 0.0).unwrap();
        let exact = inst.dissimilarity.exact;
        let est = delta_sampled(&inst.problem, 64, &RandomStream::new(17));
        assert!(est.delta_a <= exact.delta_a + 1e-9);
        assert!(est.delta_b <= exact.delta_b + 1e-9);
        assert!(est.delta_a >= 0.5 * exact.delta_a);
    }

    #[test]
    fn sampled_is_monotone_in_pairs() {
        let inst = QuadraticInstance::from_specs("remark", remark_specs(), 0.0).unwrap();
        let s = RandomStream::new(3);
        let mut prev = 0.0;
        for pairs in [1, 2, 5, 10, 20] {
            let r = delta_sampled(&inst.problem, pairs, &s);
            assert!(r.delta_a >= prev);
            prev = r.delta_a;
        }
    }
}
