use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::local_solvers::{solve_fgd, StoppingRule, Surrogate};
use crate::oracle::{ClientOracle, DistributedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    DirectLinear,
    LongFgd,
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Vector,
    pub f: f64,
    pub method: ReferenceMethod,
    /// `‖∇f(x*)‖`.
    pub residual: f64,
}

/// Relative gradient tolerance of the reference solve, scaled by
/// `1 + ‖∇f(x⁰)‖`.
pub const REFERENCE_TOLERANCE: f64 = 1e-11;

const LONG_FGD_MAX_STEPS: usize = 5_000_000;

/// Minimizer of `f` for convex problems: a direct solve with two refinement
/// passes for pure quadratics, otherwise accelerated gradient descent from
/// `x0` to a gradient norm of `1e-11·(1 + ‖∇f(x0)‖)`.
pub fn reference_optimum(problem: &DistributedProblem, x0: &Vector) -> Result<ReferenceSolution> {
    if !problem.is_convex() {
        return Err(Error::Unsupported(
            "reference optimum of a nonconvex problem; track gradient norms instead".into(),
        ));
    }
    let averaged;
    let f: &dyn ClientOracle = match problem.global() {
        Some(g) => g,
        None => {
            averaged = AveragedOracle { problem };
            &averaged
        }
    };
    if let Some(q) = f.quadratic() {
        let c = q.linear_term();
        if let Some(mut x) = q.solve(c) {
            for _ in 0..2 {
                let r = c - q.hessian_apply(&x);
                if let Some(dx) = q.solve(&r) {
                    x += dx;
                }
            }
            let residual = f.gradient(&x).norm();
            return Ok(ReferenceSolution {
                f: f.value(&x),
                x,
                method: ReferenceMethod::DirectLinear,
                residual,
            });
        }
    }
    let scale = 1.0 + f.gradient(x0).norm();
    let rule =
        StoppingRule::abs_grad(REFERENCE_TOLERANCE * scale).with_max_steps(LONG_FGD_MAX_STEPS);
    let report = solve_fgd(&Surrogate::new(f), x0, rule)?;
    Ok(ReferenceSolution {
        f: f.value(&report.solution),
        residual: report.final_grad_norm,
        x: report.solution,
        method: ReferenceMethod::LongFgd,
    })
}

/// `f` seen through the client oracles when no direct oracle is attached.
struct AveragedOracle<'a> {
    problem: &'a DistributedProblem,
}

impl ClientOracle for AveragedOracle<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.problem.value(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let grads: Vec<Vector> = self
            .problem
            .clients()
            .iter()
            .map(|c| c.gradient(x))
            .collect();
        linalg::mean(&grads)
    }

    fn smoothness(&self) -> Option<f64> {
        let c = self.problem.constants();
        c.global_smoothness.or(c.smoothness)
    }

    fn convexity(&self) -> Option<f64> {
        self.problem.constants().convexity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ProblemConstants;
    use crate::problems::quadratic::{QuadraticOracle, SymmetricMatrix};
    use nalgebra::{dvector, DMatrix};
    use std::sync::Arc;

    fn shifted(center: f64) -> Arc<dyn ClientOracle> {
        // ½(x − c)² = ½x² − c·x + c²/2
        let h = SymmetricMatrix::Dense(DMatrix::from_element(1, 1, 1.0));
        Arc::new(QuadraticOracle::new(
            h,
            dvector![center],
            0.5 * center * center,
            0.0,
        ))
    }

    fn constants() -> ProblemConstants {
        ProblemConstants {
            smoothness: Some(1.0),
            global_smoothness: Some(1.0),
            convexity: Some(1.0),
            ..Default::default()
        }
    }

    #[test]
    fn one_dimensional_shift() {
        let p = DistributedProblem::new("one", vec![shifted(3.0)], constants());
        let r = reference_optimum(&p, &dvector![0.0]).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-12);
        assert!(r.f.abs() < 1e-12);
    }

    #[test]
    fn two_clients_without_global_oracle() {
        // ½x² and ½(x − 2)²: ∇f = x − 1, f* = ½
        let p = DistributedProblem::new("two", vec![shifted(0.0), shifted(2.0)], constants());
        let r = reference_optimum(&p, &dvector![10.0]).unwrap();
        assert_eq!(r.method, ReferenceMethod::LongFgd);
        assert!((r.x[0] - 1.0).abs() < 1e-10);
        assert!((r.f - 0.5).abs() < 1e-12);
    }
}
