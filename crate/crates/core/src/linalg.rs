//! Dense vector helpers and a conjugate-gradient solver.
//!
//! Vectors are plain `nalgebra` column vectors. Every reduction here sums in
//! index order, so results do not depend on how callers schedule work.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Linear combination `Σ coeffs[j] · vectors[j]`.
pub fn axpy_combine(coeffs: &[f64], vectors: &[&Vector]) -> Result<Vector> {
    if coeffs.len() != vectors.len() {
        return Err(Error::Dimension {
            expected: coeffs.len(),
            found: vectors.len(),
        });
    }
    let Some(first) = vectors.first() else {
        return Err(Error::config("axpy_combine needs at least one vector"));
    };
    let dim = first.len();
    let mut out = Vector::zeros(dim);
    for (&c, v) in coeffs.iter().zip(vectors) {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: v.len(),
            });
        }
        out.axpy(c, v, 1.0);
    }
    Ok(out)
}

/// Arithmetic mean of equally sized vectors, summed in order.
pub fn mean(vectors: &[Vector]) -> Vector {
    assert!(!vectors.is_empty(), "mean of an empty set");
    let mut out = Vector::zeros(vectors[0].len());
    for v in vectors {
        out += v;
    }
    out / vectors.len() as f64
}

pub fn dist_sq(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &Vector, b: &Vector) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn check_dim(v: &Vector, expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            found: v.len(),
        })
    }
}

pub fn ensure_finite(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vector,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Conjugate gradient for a symmetric positive definite operator.
///
/// Starts from zero so the result is a function of `(apply, rhs)` only.
/// Stops once `‖rhs − A x‖ ≤ rel_tol · ‖rhs‖`.
pub fn conjugate_gradient<F>(
    apply: F,
    rhs: &Vector,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&Vector) -> Vector,
{
    let rhs_norm = rhs.norm();
    let mut x = Vector::zeros(rhs.len());
    if rhs_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            residual_norm: 0.0,
        });
    }
    let target = rel_tol * rhs_norm;
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    let mut iterations = 0;
    while rs.sqrt() > target {
        if iterations == max_iter {
            return Err(Error::SolverExhausted {
                steps: iterations,
                grad_norm: rs.sqrt(),
            });
        }
        let ap = apply(&p);
        let curvature = p.dot(&ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(Error::Contract(format!(
                "conjugate gradient met non-positive curvature {curvature:e}"
            )));
        }
        let alpha = rs / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_next = r.norm_squared();
        p *= rs_next / rs;
        p += &r;
        rs = rs_next;
        iterations += 1;
    }
    Ok(CgOutcome {
        solution: x,
        iterations,
        residual_norm: rs.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn combine_examples() {
        let a = dvector![1.0, 2.0];
        assert_eq!(axpy_combine(&[1.0], &[&a]).unwrap(), a);

        let e1 = dvector![2.0, 0.0];
        let e2 = dvector![0.0, 2.0];
        assert_eq!(
            axpy_combine(&[0.5, 0.5], &[&e1, &e2]).unwrap(),
            dvector![1.0, 1.0]
        );

        let ones = dvector![1.0, 1.0];
        assert_eq!(
            axpy_combine(&[2.0, -1.0], &[&ones, &ones]).unwrap(),
            dvector![1.0, 1.0]
        );
    }

    #[test]
    fn combine_rejects_mismatch() {
        let a = dvector![1.0, 2.0];
        let b = dvector![1.0, 2.0, 3.0];
        assert!(matches!(
            axpy_combine(&[1.0, 1.0], &[&a, &b]),
            Err(Error::Dimension {
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            axpy_combine(&[1.0], &[&a, &a]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cg_matches_dense_solve() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = dvector![1.0, -2.0, 0.5];
        let out = conjugate_gradient(|v| &m * v, &b, 1e-14, 50).unwrap();
        let direct = m.clone().lu().solve(&b).unwrap();
        assert!((out.solution - direct).norm() < 1e-12);
        assert!(out.iterations <= 4);
    }

    #[test]
    fn cg_zero_rhs() {
        let out = conjugate_gradient(|v| v.clone(), &Vector::zeros(4), 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution, Vector::zeros(4));
    }
}
