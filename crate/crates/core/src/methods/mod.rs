//! Federated optimization methods as step functions over
//! `(ServerState, ClientState…)`.
//!
//! Every step draws its randomness from the stream `[seed, k]` and runs the
//! client work in parallel with results collected in client order, so a
//! trajectory depends only on the seed and never on the worker count.

mod accumulator;
mod baselines;
mod config;
mod control_variate;
mod dane;
mod fedred;
mod params;
mod state;

pub use accumulator::{AccumulatorMode, IterateAccumulator};
pub use baselines::{
    baseline_fedprox_round, baseline_gd_round, baseline_scaffnew_step, baseline_scaffold_round,
    default_step,
};
pub use config::{
    Averaging, ControlVariate, LocalSolverSpec, LocalTolerance, MethodConfig, MethodKind,
};
pub use control_variate::{control_variate_grad_diff, control_variate_recursive_update};
pub use dane::dane_plus_round;
pub use fedred::{fedred_gd_step, fedred_gd_update, fedred_step};
pub use params::{
    suggest_parameters, ParameterRule, ProblemSummary, Regime, ETA_MARGIN,
    NONCONVEX_LOCAL_TOLERANCE, SCAFFOLD_LOCAL_STEPS,
};
pub use state::{streams, ClientState, FederatedState, ServerState};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::local_solvers::{self as ls, StopKind, StoppingRule, Surrogate};
use crate::oracle::DistributedProblem;

/// Per-client summary of one local solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSummary {
    pub steps: usize,
    pub grad_evals: usize,
    pub final_grad_norm: f64,
    /// `‖x⁺ − x_start‖`.
    pub moved: f64,
    pub decreased: bool,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub communicated: bool,
    /// Client gradient evaluations charged during this step.
    pub grad_evals: u64,
    pub local: Vec<LocalSummary>,
    /// Stopping rule the local solves used.
    pub rule: Option<StoppingRule>,
    /// Client index drawn this step, if any.
    pub selected: Option<usize>,
    /// `x_{i_k,k}`, the pre-step iterate of the drawn client (FedRed family
    /// with randomized averaging).
    pub sampled_point: Option<Vector>,
}

/// Advance `state` by one step of `cfg.method`.
pub fn step(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    match cfg.method {
        MethodKind::DanePlus => dane_plus_round(problem, cfg, state),
        MethodKind::FedRed => fedred_step(problem, cfg, state),
        MethodKind::FedRedGd => fedred_gd_step(problem, cfg, state),
        MethodKind::Gd => baseline_gd_round(problem, cfg, state),
        MethodKind::Scaffold => baseline_scaffold_round(problem, cfg, state),
        MethodKind::Scaffnew => baseline_scaffnew_step(problem, cfg, state),
        MethodKind::FedProx => baseline_fedprox_round(problem, cfg, state),
    }
}

/// Mean of the client solutions, or the one at `selected`.
pub(crate) fn aggregate(solutions: &[Vector], selected: Option<usize>) -> Vector {
    match selected {
        Some(i) => solutions[i].clone(),
        None => linalg::mean(solutions),
    }
}

/// Run the configured local solver and enforce the descent requirement
/// `F(x⁺) ≤ F(x_start)` for first-order solves.
pub(crate) fn local_solve(
    surrogate: &Surrogate<'_>,
    start: &Vector,
    spec: &LocalSolverSpec,
    rule: StoppingRule,
) -> Result<(Vector, LocalSummary)> {
    let report = ls::solve(spec.solver, surrogate, start, rule, spec.step)?;
    if !report.exact && !matches!(rule.kind, StopKind::FixedSteps(_)) && !report.decreased {
        return Err(Error::Contract(
            "local solve did not decrease its surrogate".into(),
        ));
    }
    linalg::ensure_finite(&report.solution, "local solution")?;
    let summary = LocalSummary {
        steps: report.steps_taken,
        grad_evals: report.grad_evals,
        final_grad_norm: report.final_grad_norm,
        moved: linalg::dist(&report.solution, start),
        decreased: report.decreased,
        exact: report.exact,
    };
    Ok((report.solution, summary))
}
