//! Inexact and exact minimization of client surrogates
//! `F(x) = f_i(x) + ⟨shift, x⟩ + Σ_c w_c/2 ‖x − z_c‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::oracle::ClientOracle;

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Relative residual target of the exact quadratic solve.
pub const EXACT_SOLVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProxCenter {
    pub weight: f64,
    pub center: Vector,
}

/// Client objective plus a linear shift (`−h_i`) and proximal terms.
pub struct Surrogate<'a> {
    base: &'a dyn ClientOracle,
    shift: Option<Vector>,
    centers: Vec<ProxCenter>,
}

impl<'a> Surrogate<'a> {
    pub fn new(base: &'a dyn ClientOracle) -> Self {
        Self {
            base,
            shift: None,
            centers: Vec::new(),
        }
    }

    /// Adds `−⟨h, x⟩`.
    pub fn with_control_variate(mut self, h: &Vector) -> Self {
        self.shift = Some(-h);
        self
    }

    /// Adds `weight/2 ‖x − center‖²`; zero weights are dropped.
    pub fn with_prox(mut self, weight: f64, center: &Vector) -> Self {
        if weight != 0.0 {
            self.centers.push(ProxCenter {
                weight,
                center: center.clone(),
            });
        }
        self
    }

    pub fn base(&self) -> &dyn ClientOracle {
        self.base
    }

    pub fn total_weight(&self) -> f64 {
        self.centers.iter().map(|c| c.weight).sum()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let mut v = self.base.value(x);
        if let Some(s) = &self.shift {
            v += s.dot(x);
        }
        for c in &self.centers {
            v += 0.5 * c.weight * linalg::dist_sq(x, &c.center);
        }
        v
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let g = self.base.gradient(x);
        self.complete_gradient(g, x)
    }

    /// Adds the shift and proximal parts to a base gradient `∇f_i(x)`.
    pub fn complete_gradient(&self, mut g: Vector, x: &Vector) -> Vector {
        if let Some(s) = &self.shift {
            g += s;
        }
        for c in &self.centers {
            g.axpy(c.weight, x, 1.0);
            g.axpy(-c.weight, &c.center, 1.0);
        }
        g
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.base.smoothness().map(|l| l + self.total_weight())
    }

    pub fn convexity(&self) -> Option<f64> {
        self.base.convexity().map(|mu| mu + self.total_weight())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum StopKind {
    /// Exact minimizer (quadratic surrogates only).
    Exact,
    /// `‖∇F(x⁺)‖ ≤ e`.
    AbsGrad(f64),
    /// `‖∇F(x⁺)‖ ≤ e ‖x⁺ − x_start‖`.
    RelGrad(f64),
    FixedSteps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub kind: StopKind,
    pub max_steps: usize,
}

impl StoppingRule {
    pub fn new(kind: StopKind) -> Self {
        Self {
            kind,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn abs_grad(e: f64) -> Self {
        Self::new(StopKind::AbsGrad(e))
    }

    pub fn rel_grad(e: f64) -> Self {
        Self::new(StopKind::RelGrad(e))
    }

    pub fn fixed_steps(k: usize) -> Self {
        Self::new(StopKind::FixedSteps(k))
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Under the relative rule, an iterate within rounding distance of
    /// `x_start` whose gradient stopped shrinking cannot satisfy
    /// `‖∇F‖ ≤ e‖x⁺ − x_start‖`; `x_start` itself is then the stationary point
    /// at working precision.
    fn at_rounding_floor(
        &self,
        grad_norm: f64,
        prev_grad_norm: f64,
        x: &Vector,
        start: &Vector,
    ) -> bool {
        grad_norm >= prev_grad_norm && self.stuck_at_start(x, start)
    }

    fn stuck_at_start(&self, x: &Vector, start: &Vector) -> bool {
        matches!(self.kind, StopKind::RelGrad(_))
            && linalg::dist(x, start) <= 64.0 * f64::EPSILON * (1.0 + start.norm())
    }

    fn accepts(&self, grad_norm: f64, moved: f64, steps: usize) -> bool {
        match self.kind {
            StopKind::Exact => false,
            StopKind::AbsGrad(e) => grad_norm <= e,
            StopKind::RelGrad(e) => grad_norm == 0.0 || grad_norm <= e * moved,
            StopKind::FixedSteps(k) => steps >= k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vector,
    pub steps_taken: usize,
    /// Calls to the base gradient made by the solver.
    pub grad_evals: usize,
    pub final_grad_norm: f64,
    /// `F(x⁺) ≤ F(x_start)`.
    pub decreased: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Gd,
    Fgd,
}

/// Dispatch on `kind`; `step` only applies to gradient descent.
pub fn solve(
    kind: SolverKind,
    surrogate: &Surrogate<'_>,
    start: &Vector,
    rule: StoppingRule,
    step: Option<f64>,
) -> Result<SolveReport> {
    match kind {
        SolverKind::Exact => solve_exact_quadratic(surrogate, start),
        SolverKind::Gd => solve_gd(surrogate, start, step, rule),
        SolverKind::Fgd => solve_fgd(surrogate, start, rule),
    }
}

/// `new ≤ old` up to the rounding error of evaluating a value of size `old`.
fn not_above(new: f64, old: f64) -> bool {
    new <= old + 16.0 * f64::EPSILON * old.abs().max(1.0)
}

fn exhausted(steps: usize, grad_norm: f64) -> Error {
    Error::SolverExhausted { steps, grad_norm }
}

/// Gradient descent `x ← x − step·∇F(x)` with step `1/(L + Σw)` by default.
///
/// On a surrogate without a convexity hint the iterate of smallest gradient
/// norm is returned.
pub fn solve_gd(
    surrogate: &Surrogate<'_>,
    start: &Vector,
    step: Option<f64>,
    rule: StoppingRule,
) -> Result<SolveReport> {
    if rule.kind == StopKind::Exact {
        return Err(Error::config(
            "the exact stopping rule needs the exact solver",
        ));
    }
    let smoothness = surrogate
        .smoothness()
        .ok_or_else(|| Error::config("gradient descent needs a smoothness constant"))?;
    let step = match step {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(Error::config(format!(
                "local step must be positive, got {s}"
            )))
        }
        None if smoothness > 0.0 => 1.0 / smoothness,
        None => return Err(Error::config("surrogate smoothness is zero")),
    };
    let track_best = surrogate.convexity().is_none();

    let mut x = start.clone();
    let mut g = surrogate.gradient(&x);
    let mut grad_norm = g.norm();
    let mut evals = 1;
    let mut steps = 0;
    let start_grad_norm = grad_norm;
    let mut best = (grad_norm, x.clone());
    loop {
        linalg::ensure_finite(&g, "local gradient")?;
        if rule.accepts(grad_norm, linalg::dist(&x, start), steps) {
            break;
        }
        if steps == rule.max_steps {
            return Err(exhausted(steps, grad_norm));
        }
        let mut x_next = x.clone();
        x_next.axpy(-step, &g, 1.0);
        if x_next == x && !matches!(rule.kind, StopKind::FixedSteps(_)) {
            if !rule.stuck_at_start(&x, start) {
                return Err(exhausted(steps, grad_norm));
            }
            x = start.clone();
            grad_norm = start_grad_norm;
            break;
        }
        x = x_next;
        steps += 1;
        g = surrogate.gradient(&x);
        let prev_grad_norm = grad_norm;
        grad_norm = g.norm();
        evals += 1;
        if rule.at_rounding_floor(grad_norm, prev_grad_norm, &x, start) {
            x = start.clone();
            grad_norm = start_grad_norm;
            break;
        }
        if track_best && grad_norm < best.0 {
            best = (grad_norm, x.clone());
        }
    }
    let (final_grad_norm, solution) = if track_best && matches!(rule.kind, StopKind::AbsGrad(_)) {
        best
    } else {
        (grad_norm, x)
    };
    let decreased = not_above(surrogate.value(&solution), surrogate.value(start));
    Ok(SolveReport {
        solution,
        steps_taken: steps,
        grad_evals: evals,
        final_grad_norm,
        decreased,
        exact: false,
    })
}

/// Nesterov's accelerated gradient method with step `1/(L + Σw)`.
///
/// Momentum is `(√κ − 1)/(√κ + 1)` for a strongly convex surrogate and
/// `t/(t + 3)` otherwise. The stopping rule is checked at the extrapolated
/// point, which is returned once it also has `F ≤ F(x_start)`.
pub fn solve_fgd(
    surrogate: &Surrogate<'_>,
    start: &Vector,
    rule: StoppingRule,
) -> Result<SolveReport> {
    if rule.kind == StopKind::Exact {
        return Err(Error::config(
            "the exact stopping rule needs the exact solver",
        ));
    }
    let smoothness = surrogate
        .smoothness()
        .ok_or_else(|| Error::config("fast gradient descent needs a smoothness constant"))?;
    let mu = surrogate
        .convexity()
        .ok_or_else(|| Error::config("fast gradient descent needs a convex surrogate"))?;
    if !(smoothness > 0.0) {
        return Err(Error::config("surrogate smoothness is zero"));
    }
    let strong_momentum = (mu > 0.0).then(|| {
        let root = (smoothness / mu).sqrt();
        (root - 1.0) / (root + 1.0)
    });
    let f_start = surrogate.value(start);

    let mut x = start.clone();
    let mut y = start.clone();
    let mut g = surrogate.gradient(&y);
    let mut grad_norm = g.norm();
    let start_grad_norm = grad_norm;
    let mut evals = 1;
    let mut steps = 0;
    loop {
        linalg::ensure_finite(&g, "local gradient")?;
        let fixed = matches!(rule.kind, StopKind::FixedSteps(_));
        if rule.accepts(grad_norm, linalg::dist(&y, start), steps)
            && (fixed || steps == 0 || not_above(surrogate.value(&y), f_start))
        {
            break;
        }
        if steps == rule.max_steps {
            return Err(exhausted(steps, grad_norm));
        }
        let mut x_next = y.clone();
        x_next.axpy(-1.0 / smoothness, &g, 1.0);
        let momentum = strong_momentum.unwrap_or(steps as f64 / (steps as f64 + 3.0));
        let y_next = &x_next + (&x_next - &x) * momentum;
        if y_next == y && x_next == x && !fixed {
            if !rule.stuck_at_start(&y, start) {
                return Err(exhausted(steps, grad_norm));
            }
            y = start.clone();
            grad_norm = start_grad_norm;
            break;
        }
        y = y_next;
        x = x_next;
        steps += 1;
        g = surrogate.gradient(&y);
        let prev_grad_norm = grad_norm;
        grad_norm = g.norm();
        evals += 1;
        if rule.at_rounding_floor(grad_norm, prev_grad_norm, &y, start) {
            y = start.clone();
            grad_norm = start_grad_norm;
            break;
        }
    }
    let decreased = not_above(surrogate.value(&y), f_start);
    Ok(SolveReport {
        solution: y,
        steps_taken: steps,
        grad_evals: evals,
        final_grad_norm: grad_norm,
        decreased,
        exact: false,
    })
}

/// Solves `(H + Σw I) x = c − shift + Σ w z`, directly when the Hessian has
/// a spectral representation and by conjugate gradient from zero otherwise.
///
/// The result does not depend on `start`, and no oracle gradients are used.
pub fn solve_exact_quadratic(surrogate: &Surrogate<'_>, start: &Vector) -> Result<SolveReport> {
    let q = surrogate
        .base
        .quadratic()
        .ok_or_else(|| Error::Unsupported("exact local solves need a quadratic client".into()))?;
    let w = surrogate.total_weight();
    let mut rhs = q.linear_term().clone();
    if let Some(s) = &surrogate.shift {
        rhs -= s;
    }
    for c in &surrogate.centers {
        rhs.axpy(c.weight, &c.center, 1.0);
    }
    let apply = |v: &Vector| {
        let mut out = q.hessian_apply(v);
        out.axpy(w, v, 1.0);
        out
    };
    let (solution, steps_taken) = match q.solve_shifted(w, &rhs) {
        Some(x) => (x, 1),
        None => {
            let max_iter = 10 * rhs.len() + 100;
            let cg = linalg::conjugate_gradient(apply, &rhs, EXACT_SOLVE_TOLERANCE, max_iter)?;
            (cg.solution, cg.iterations)
        }
    };
    let residual = apply(&solution) - &rhs;
    let decreased = not_above(surrogate.value(&solution), surrogate.value(start));
    Ok(SolveReport {
        solution,
        steps_taken,
        grad_evals: 0,
        final_grad_norm: residual.norm(),
        decreased,
        exact: true,
    })
}

/// Inexactness level `e_r = √(λ(μ + λ) / (8(r + 1)(r + 2)))`.
pub fn schedule_e_r(r: usize, lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::config(format!(
            "schedule needs lambda > 0, got {lambda}"
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::config(format!("schedule needs mu >= 0, got {mu}")));
    }
    let r = r as f64;
    Ok((lambda * (mu + lambda) / (8.0 * (r + 1.0) * (r + 2.0))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::quadratic::{QuadraticOracle, SymmetricMatrix};
    use nalgebra::{dvector, DMatrix};

    fn quad(diag: &[f64], linear: &[f64]) -> QuadraticOracle {
        let h = SymmetricMatrix::Dense(DMatrix::from_diagonal(&Vector::from_row_slice(diag)));
        QuadraticOracle::new(h, Vector::from_row_slice(linear), 0.0, 0.0)
    }

    #[test]
    fn gd_one_matched_step_lands_at_minimum() {
        let f = quad(&[1.0], &[0.0]);
        let s = Surrogate::new(&f);
        let rep = solve_gd(&s, &dvector![1.0], Some(1.0), StoppingRule::fixed_steps(1)).unwrap();
        assert_eq!(rep.solution, dvector![0.0]);
        assert_eq!(rep.steps_taken, 1);
        assert_eq!(rep.grad_evals, 2);
    }

    #[test]
    fn rel_grad_infinite_stops_after_one_step() {
        let f = quad(&[2.0, 1.0], &[1.0, -1.0]);
        let s = Surrogate::new(&f).with_prox(1.0, &dvector![0.0, 0.0]);
        let rep = solve_gd(
            &s,
            &dvector![3.0, 3.0],
            None,
            StoppingRule::rel_grad(f64::INFINITY),
        )
        .unwrap();
        assert_eq!(rep.steps_taken, 1);
    }

    #[test]
    fn gd_matches_exact_solver() {
        let f = quad(&[3.0, 1.0, 0.5], &[1.0, 2.0, -1.0]);
        let h = dvector![0.3, -0.2, 0.1];
        let center = dvector![1.0, 1.0, 1.0];
        let s = Surrogate::new(&f)
            .with_control_variate(&h)
            .with_prox(2.0, &center);
        let gd = solve_gd(&s, &center, None, StoppingRule::abs_grad(1e-8)).unwrap();
        let exact = solve_exact_quadratic(&s, &center).unwrap();
        assert!(gd.final_grad_norm <= 1e-8);
        assert!(linalg::dist(&gd.solution, &exact.solution) < 1e-6);
        assert!(gd.decreased && exact.exact);
    }

    #[test]
    fn exact_solver_hand_example() {
        // A = I, λ = 1, h = 0, b = 0, center c: minimizer c/2
        let f = quad(&[1.0, 1.0], &[0.0, 0.0]);
        let c = dvector![2.0, -4.0];
        let s = Surrogate::new(&f).with_prox(1.0, &c);
        let rep = solve_exact_quadratic(&s, &Vector::zeros(2)).unwrap();
        assert!(linalg::dist(&rep.solution, &dvector![1.0, -2.0]) < 1e-14);
        assert_eq!(rep.grad_evals, 0);
    }

    #[test]
    fn fgd_one_dimensional_bound() {
        let f = quad(&[1.0], &[0.0]);
        let s = Surrogate::new(&f);
        let rep = solve_fgd(&s, &dvector![1.0], StoppingRule::abs_grad(1e-10)).unwrap();
        assert!(rep.steps_taken <= 60);
        assert!(rep.final_grad_norm <= 1e-10);
    }

    #[test]
    fn optimal_start_takes_no_steps() {
        let f = quad(&[2.0, 5.0], &[2.0, 5.0]);
        let s = Surrogate::new(&f);
        let opt = dvector![1.0, 1.0];
        for rule in [StoppingRule::abs_grad(1e-12), StoppingRule::rel_grad(0.5)] {
            assert_eq!(solve_gd(&s, &opt, None, rule).unwrap().steps_taken, 0);
            assert_eq!(solve_fgd(&s, &opt, rule).unwrap().steps_taken, 0);
        }
    }

    #[test]
    fn stalled_iterate_ends_the_solve() {
        // ∇f(1) = 1 − b = −2⁻⁵², and a step of 10⁻³ cannot move x = 1
        let b = 1.0 + f64::EPSILON;
        let f = quad(&[1.0], &[b]);
        let s = Surrogate::new(&f);
        let start = dvector![1.0];
        let rel = solve_gd(&s, &start, Some(1e-3), StoppingRule::rel_grad(0.5)).unwrap();
        assert_eq!((rel.solution, rel.steps_taken), (start.clone(), 0));
        assert!(rel.final_grad_norm > 0.0);
        assert!(matches!(
            solve_gd(&s, &start, Some(1e-3), StoppingRule::abs_grad(1e-20)),
            Err(Error::SolverExhausted { steps: 0, .. })
        ));
    }

    #[test]
    fn exhaustion_is_an_error() {
        let f = quad(&[100.0, 1.0], &[1.0, 1.0]);
        let s = Surrogate::new(&f);
        let rule = StoppingRule::abs_grad(1e-14).with_max_steps(3);
        assert!(matches!(
            solve_gd(&s, &Vector::zeros(2), None, rule),
            Err(Error::SolverExhausted { steps: 3, .. })
        ));
    }

    #[test]
    fn schedule_values() {
        assert!((schedule_e_r(0, 2.0, 0.0).unwrap().powi(2) - 0.25).abs() < 1e-15);
        assert!(matches!(schedule_e_r(0, 0.0, 1.0), Err(Error::Config(_))));
        let (lambda, mu) = (3.0, 0.5);
        let partial: f64 = (0..10_000)
            .map(|r| schedule_e_r(r, lambda, mu).unwrap().powi(2))
            .sum();
        assert!(partial <= lambda * (mu + lambda) / 8.0);
    }
}
