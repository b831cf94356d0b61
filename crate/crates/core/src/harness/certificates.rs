//! Worst-case convergence bounds evaluated against recorded traces.

use serde::Serialize;

use super::runner::ExperimentResult;
use crate::methods::{Averaging, LocalTolerance, MethodConfig, MethodKind};

/// Constants a bound may consume.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CertificateConstants {
    pub delta_a: f64,
    pub delta_b: f64,
    pub smoothness: Option<f64>,
    pub mu: f64,
    /// `F_0 = f(x⁰) − f*`, or an upper bound on it.
    pub initial_gap: Option<f64>,
    /// `R_0² = ‖x⁰ − x*‖²`.
    pub initial_dist_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Exact proximal steps on a convex problem.
    ConvexExact,
    /// Inexact proximal steps on a convex problem.
    ConvexInexact,
    /// Minimum gradient norm for the nonconvex proximal method.
    NonconvexMinGrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub kind: CertificateKind,
    pub rounds: usize,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertificateReport {
    pub applicable: Vec<CertificateKind>,
    /// Number of `(bound, recorded point)` pairs evaluated.
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `μR_0² / (2[(1 + μ/λ)^R − 1])`, which tends to `λR_0²/(2R)` as `μ → 0`.
pub fn convex_exact_bound(lambda: f64, mu: f64, r0_sq: f64, rounds: usize) -> f64 {
    let r = rounds as f64;
    if mu > 0.0 {
        let growth = (r * (mu / lambda).ln_1p()).exp_m1();
        if growth > 0.0 {
            return mu * r0_sq / (2.0 * growth);
        }
    }
    lambda * r0_sq / (2.0 * r)
}

/// `λR_0² / R`.
pub fn convex_inexact_bound(lambda: f64, r0_sq: f64, rounds: usize) -> f64 {
    lambda * r0_sq / rounds as f64
}

/// `4(a+1)²/(a−1) · δ_B F_0 / R + (2/R) Σ_{r<R} e_r²`.
pub fn nonconvex_min_grad_bound(
    a: f64,
    delta_b: f64,
    f0: f64,
    rounds: usize,
    sum_e_sq: f64,
) -> f64 {
    let r = rounds as f64;
    4.0 * (a + 1.0).powi(2) / (a - 1.0) * delta_b * f0 / r + 2.0 * sum_e_sq / r
}

/// `96 L F_0 / K`, a bound on the expected mean `‖∇f‖²` over the drawn
/// iterates of deterministic FedRed-GD on a nonconvex problem.
pub fn fedred_gd_nonconvex_bound(smoothness: f64, f0: f64, iterations: usize) -> f64 {
    96.0 * smoothness * f0 / iterations as f64
}

/// Seed-averaged check of [`fedred_gd_nonconvex_bound`]: the mean over runs
/// of each run's mean sampled `‖∇f‖²` against `slack ·` bound. Returns
/// `(observed, bound)`.
pub fn expected_sampled_grad(
    runs: &[ExperimentResult],
    smoothness: f64,
    f0: f64,
    slack: f64,
) -> Option<(f64, f64)> {
    let per_run: Vec<(f64, usize)> = runs
        .iter()
        .filter(|r| !r.diagnostics.sampled_grad_norm_sq.is_empty())
        .map(|r| {
            let s = &r.diagnostics.sampled_grad_norm_sq;
            (s.iter().sum::<f64>() / s.len() as f64, s.len())
        })
        .collect();
    let k = per_run.iter().map(|(_, k)| *k).min()?;
    let observed = per_run.iter().map(|(m, _)| m).sum::<f64>() / per_run.len() as f64;
    Some((
        observed,
        slack * fedred_gd_nonconvex_bound(smoothness, f0, k),
    ))
}

/// Evaluate every bound that applies to `cfg` at each recorded round
/// `R ≥ 1` of `result`.
///
/// The convex bounds cover DANE+ with averaged aggregation and need `R_0²`.
/// The nonconvex bound covers DANE+ with `a > 1` and needs `F_0`; its error
/// term sums the local tolerances of rounds `0..R`.
pub fn check_rate_certificates(
    result: &ExperimentResult,
    cfg: &MethodConfig,
    constants: &CertificateConstants,
) -> CertificateReport {
    let mut report = CertificateReport::default();
    if cfg.method != MethodKind::DanePlus {
        return report;
    }
    let lambda = cfg.lambda;
    let convex_kind = match (cfg.averaging, cfg.local.tolerance) {
        (Averaging::Rand, _) => None,
        (_, LocalTolerance::Exact) => Some(CertificateKind::ConvexExact),
        _ => Some(CertificateKind::ConvexInexact),
    };
    let convex = result.traces.first().is_some_and(|t| t.f_gap.is_some());
    if convex {
        let (Some(kind), Some(r0_sq)) = (convex_kind, constants.initial_dist_sq) else {
            return report;
        };
        report.applicable.push(kind);
        for t in result.traces.iter().filter(|t| t.rounds >= 1) {
            let bound = match kind {
                CertificateKind::ConvexExact => {
                    convex_exact_bound(lambda, constants.mu, r0_sq, t.rounds)
                }
                _ => convex_inexact_bound(lambda, r0_sq, t.rounds),
            };
            record(&mut report, kind, t.rounds, t.metric(), bound);
        }
        return report;
    }
    let Some(f0) = constants.initial_gap.filter(|_| cfg.a > 1.0) else {
        return report;
    };
    report.applicable.push(CertificateKind::NonconvexMinGrad);
    let mut e_sq_prefix = vec![0.0];
    for rec in &result.diagnostics.local_steps {
        let e = rec.tolerance.unwrap_or(0.0);
        let last = *e_sq_prefix.last().unwrap_or(&0.0);
        e_sq_prefix.push(last + e * e);
    }
    for t in result.traces.iter().filter(|t| t.rounds >= 1) {
        let sum = e_sq_prefix[t.rounds.min(e_sq_prefix.len() - 1)];
        let bound = nonconvex_min_grad_bound(cfg.a, constants.delta_b, f0, t.rounds, sum);
        record(
            &mut report,
            CertificateKind::NonconvexMinGrad,
            t.rounds,
            t.grad_norm_sq,
            bound,
        );
    }
    report
}

fn record(
    report: &mut CertificateReport,
    kind: CertificateKind,
    rounds: usize,
    observed: f64,
    bound: f64,
) {
    report.checked += 1;
    if !(observed <= bound) {
        report.violations.push(Violation {
            kind,
            rounds,
            observed,
            bound,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bound_reduces_to_sublinear_rate() {
        assert_eq!(convex_exact_bound(4.0, 0.0, 2.0, 8), 0.5);
        let tiny = convex_exact_bound(4.0, 1e-14, 2.0, 8);
        assert!((tiny - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exact_bound_is_linear_with_strong_convexity() {
        // μ = λ: μR_0²/(2(2^R − 1))
        assert!((convex_exact_bound(1.0, 1.0, 3.0, 4) - 3.0 / 30.0).abs() < 1e-15);
        assert!(convex_exact_bound(1.0, 1.0, 3.0, 4) <= convex_exact_bound(1.0, 0.0, 3.0, 4));
    }

    #[test]
    fn nonconvex_constant_at_a_equal_two() {
        assert_eq!(nonconvex_min_grad_bound(2.0, 1.0, 1.0, 1, 0.0), 36.0);
        assert_eq!(nonconvex_min_grad_bound(2.0, 1.0, 1.0, 4, 2.0), 10.0);
    }
}
