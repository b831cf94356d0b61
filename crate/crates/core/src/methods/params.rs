//! Parameter choices backed by the convergence theory.

use serde::{Deserialize, Serialize};

use super::config::{Averaging, LocalSolverSpec, LocalTolerance, MethodConfig, MethodKind};
use crate::error::{Error, Result};
use crate::problems::DissimilarityReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `μ > 0`.
    StronglyConvex,
    /// `μ = 0`.
    Convex,
    Nonconvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterRule {
    /// Constants from the convergence theorems.
    #[default]
    Theory,
    /// FedRed family: `p = δ/L`, `η` of order `L`, then `λ = p·η`.
    Practical,
}

/// Problem constants that parameter rules may consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSummary {
    pub delta: DissimilarityReport,
    pub smoothness: Option<f64>,
    pub mu: f64,
    /// `σ²` of the stochastic gradients (0 when deterministic).
    pub gradient_variance: f64,
    /// Target accuracy, needed for stochastic convex FedRed-GD.
    pub epsilon: Option<f64>,
    /// Iteration horizon `K`, needed for stochastic nonconvex FedRed-GD.
    pub horizon: Option<usize>,
    /// `f(x⁰) − f*` (or an upper bound), needed with `σ > 0` in the nonconvex case.
    pub initial_gap: Option<f64>,
}

/// Relative margin in `η = L(1 + margin) > L` for convex FedRed-GD.
pub const ETA_MARGIN: f64 = 0.01;

/// Local accuracy used for stationary nonconvex subproblem solves.
pub const NONCONVEX_LOCAL_TOLERANCE: f64 = 1e-9;

/// Default Scaffold local steps.
pub const SCAFFOLD_LOCAL_STEPS: usize = 10;

pub fn suggest_parameters(
    method: MethodKind,
    regime: Regime,
    summary: &ProblemSummary,
    rule: ParameterRule,
) -> Result<MethodConfig> {
    let need_l = || {
        summary
            .smoothness
            .filter(|l| *l > 0.0)
            .ok_or_else(|| Error::config("smoothness constant L is required"))
    };
    let delta_a = summary.delta.delta_a;
    let delta_b = summary.delta.delta_b;
    let mu = match regime {
        Regime::StronglyConvex if !(summary.mu > 0.0) => {
            return Err(Error::config("strongly convex regime needs mu > 0"));
        }
        Regime::StronglyConvex => summary.mu,
        _ => 0.0,
    };
    let convex = regime != Regime::Nonconvex;
    let sigma_sq = summary.gradient_variance;

    let mut cfg = MethodConfig::new(method);
    cfg.mu = mu;
    match method {
        MethodKind::DanePlus => {
            if convex {
                cfg.lambda = 2.0 * delta_a;
                cfg.local = LocalSolverSpec::gd(LocalTolerance::RelGradSchedule);
            } else {
                cfg.a = 2.0;
                cfg.lambda = cfg.a * delta_b;
                cfg.averaging = Averaging::Rand;
                cfg.local = LocalSolverSpec::gd(LocalTolerance::AbsGrad(NONCONVEX_LOCAL_TOLERANCE));
            }
            if !(cfg.lambda > 0.0) {
                return Err(Error::config(
                    "dane_plus needs a positive dissimilarity constant",
                ));
            }
        }
        MethodKind::FedRed => {
            if convex {
                let l = need_l()?;
                cfg.lambda = delta_a;
                cfg.eta = (2.0 * l).max(cfg.lambda);
                cfg.p = (cfg.lambda + mu / 2.0) / (cfg.eta + mu / 2.0);
                cfg.q_weighting = true;
                cfg.local = LocalSolverSpec::exact();
            } else {
                cfg.lambda = delta_b;
                cfg.eta = 4.0 * delta_b;
                cfg.p = cfg.lambda / cfg.eta;
                cfg.averaging = Averaging::Rand;
                cfg.local = LocalSolverSpec::gd(LocalTolerance::AbsGrad(NONCONVEX_LOCAL_TOLERANCE));
            }
            if rule == ParameterRule::Practical {
                let l = need_l()?;
                let delta = if convex { delta_a } else { delta_b };
                cfg.eta = 2.0 * l;
                cfg.p = (delta / l).min(1.0);
                cfg.lambda = cfg.p * cfg.eta;
            }
        }
        MethodKind::FedRedGd => {
            let l = need_l()?;
            cfg.stochastic = sigma_sq > 0.0;
            if convex {
                cfg.lambda = delta_a;
                cfg.eta = if sigma_sq > 0.0 {
                    let eps = summary.epsilon.filter(|e| *e > 0.0).ok_or_else(|| {
                        Error::config("stochastic fedred_gd needs a target accuracy epsilon")
                    })?;
                    sigma_sq / eps + l
                } else {
                    l * (1.0 + ETA_MARGIN)
                };
                // the GD variant divides by η − μ/2
                cfg.p = (cfg.lambda + mu / 2.0) / (cfg.eta - mu / 2.0);
                cfg.q_weighting = true;
            } else {
                let extra = if sigma_sq > 0.0 {
                    let k = summary
                        .horizon
                        .ok_or_else(|| Error::config("stochastic fedred_gd needs the horizon K"))?;
                    let f0 = summary
                        .initial_gap
                        .filter(|g| *g > 0.0)
                        .ok_or_else(|| Error::config("stochastic fedred_gd needs f(x0) - f*"))?;
                    l * sigma_sq * k as f64 / f0
                } else {
                    0.0
                };
                cfg.eta = 3.0 * l + (9.0 * l * l + extra).sqrt();
                cfg.lambda = delta_b;
                cfg.p = delta_b / l;
                cfg.averaging = Averaging::Rand;
            }
            if rule == ParameterRule::Practical {
                let delta = if convex { delta_a } else { delta_b };
                cfg.p = delta / l;
                cfg.lambda = cfg.p * cfg.eta;
            }
            if !(cfg.p > 0.0) {
                return Err(Error::config(
                    "fedred_gd needs a positive dissimilarity constant",
                ));
            }
            cfg.p = cfg.p.min(1.0);
        }
        MethodKind::Gd => {
            cfg.step_size = Some(1.0 / need_l()?);
        }
        MethodKind::Scaffold => {
            cfg.step_size = Some(1.0 / need_l()?);
            cfg.local_steps = SCAFFOLD_LOCAL_STEPS;
        }
        MethodKind::Scaffnew => {
            let l = need_l()?;
            if !(summary.mu > 0.0) {
                return Err(Error::config("scaffnew's p = sqrt(mu/L) needs mu > 0"));
            }
            cfg.step_size = Some(1.0 / l);
            cfg.p = (summary.mu / l).sqrt().min(1.0);
        }
        MethodKind::FedProx => {
            cfg.lambda = 2.0 * if convex { delta_a } else { delta_b };
            if !(cfg.lambda > 0.0) {
                return Err(Error::config(
                    "fedprox needs a positive dissimilarity constant",
                ));
            }
            cfg.local = LocalSolverSpec::gd(LocalTolerance::AbsGrad(1e-8));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
