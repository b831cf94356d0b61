use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::reference::ReferenceSolution;
use super::trace::RoundTrace;
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::local_solvers::StopKind;
use crate::methods::{
    self, AccumulatorMode, FederatedState, IterateAccumulator, MethodConfig, StepReport,
};
use crate::oracle::DistributedProblem;

/// Default trace cadence in iterations (communication events are always
/// recorded).
pub const DEFAULT_RECORD_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Absolute(f64),
    /// Fraction of the initial metric (`f(x⁰) − f*` or `‖∇f(x⁰)‖²`).
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub max_grad_evals: Option<u64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub target: Option<Target>,
}

impl Budget {
    fn exhausted(&self, state: &FederatedState) -> bool {
        self.max_rounds
            .is_some_and(|m| state.server.comm_events >= m)
            || self.max_grad_evals.is_some_and(|m| state.grad_evals >= m)
            || self
                .max_iterations
                .is_some_and(|m| state.server.iteration >= m)
    }

    fn validate(&self) -> Result<()> {
        if self.max_rounds.is_none()
            && self.max_grad_evals.is_none()
            && self.max_iterations.is_none()
        {
            return Err(Error::config(
                "budget needs at least one of max_rounds, max_grad_evals, max_iterations",
            ));
        }
        match self.target {
            Some(Target::Absolute(e) | Target::Relative(e)) if !(e > 0.0) => {
                Err(Error::config(format!("target must be positive, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Starting point; zeros when absent.
    pub x0: Option<Vector>,
    pub seed: u64,
    pub record_every: usize,
    /// Fill `wall_ms`. Off by default so traces are reproducible byte for byte.
    pub wall_clock: bool,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            x0: None,
            seed,
            record_every: DEFAULT_RECORD_EVERY,
            wall_clock: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStepRecord {
    pub iteration: usize,
    pub round: usize,
    pub max_steps: usize,
    pub total_steps: usize,
    /// Tolerance `e` of the stopping rule in force.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// `(k, f(reference))` at `k = 0` and after every communication.
    pub reference_values: Vec<(usize, f64)>,
    pub local_steps: Vec<LocalStepRecord>,
    /// `‖∇f(x_{i_k,k})‖²` for every drawn client iterate.
    pub sampled_grad_norm_sq: Vec<f64>,
    /// Per-client stopping-rule certificates verified after local solves.
    pub premise_checks: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub traces: Vec<RoundTrace>,
    pub reached: bool,
    /// Absolute target in metric units, if one was set.
    pub target: Option<f64>,
    /// `f(x⁰) − f*` when a reference is known.
    pub initial_gap: Option<f64>,
    pub x_out: Vector,
    pub state: FederatedState,
    pub diagnostics: Diagnostics,
}

/// Re-check the stopping rule on every reported local solution.
fn verify_local_premise(report: &StepReport) -> Result<usize> {
    let Some(rule) = report.rule else {
        return Ok(0);
    };
    let mut checked = 0;
    for (i, l) in report.local.iter().enumerate() {
        let ok = match rule.kind {
            StopKind::RelGrad(e) => {
                l.moved == 0.0 || l.final_grad_norm == 0.0 || l.final_grad_norm <= e * l.moved
            }
            StopKind::AbsGrad(e) => l.final_grad_norm <= e,
            StopKind::Exact | StopKind::FixedSteps(_) => continue,
        };
        if !ok {
            return Err(Error::Contract(format!(
                "client {i}: local solution violates its stopping rule ({:?}, grad norm {:e}, moved {:e})",
                rule.kind, l.final_grad_norm, l.moved
            )));
        }
        checked += 1;
    }
    Ok(checked)
}

fn measure(
    problem: &DistributedProblem,
    x: &Vector,
    reference: Option<&ReferenceSolution>,
    state: &FederatedState,
    wall: Option<f64>,
) -> RoundTrace {
    RoundTrace {
        k: state.server.iteration,
        rounds: state.server.comm_events,
        grad_evals: state.grad_evals,
        f_gap: reference.map(|r| problem.value(x) - r.f),
        grad_norm_sq: problem.gradient(x).norm_squared(),
        dist_sq: reference.map(|r| linalg::dist_sq(x, &r.x)),
        wall_ms: wall,
    }
}

/// Step `cfg.method` on `problem` until the budget trips or the target is
/// met, recording traces at `k = 0`, at every communication, every
/// `record_every` iterations and at the final step.
///
/// The reported point is the `q`-weighted mean iterate when
/// `cfg.q_weighting` is set, the running minimum-gradient-norm candidate on
/// nonconvex problems, and the server reference otherwise.
pub fn run_experiment(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    budget: &Budget,
    options: &RunOptions,
    reference: Option<&ReferenceSolution>,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    budget.validate()?;
    if options.record_every == 0 {
        return Err(Error::config("record_every must be at least 1"));
    }
    let started = Instant::now();
    let wall = || {
        options
            .wall_clock
            .then(|| started.elapsed().as_secs_f64() * 1e3)
    };
    let x0 = options
        .x0
        .clone()
        .unwrap_or_else(|| Vector::zeros(problem.dim()));
    let mut state = FederatedState::initialize(problem, cfg, &x0, options.seed)?;

    let mode = match cfg.output_q() {
        Some(q) => Some(AccumulatorMode::QWeighted(q)),
        None if !problem.is_convex() => Some(AccumulatorMode::BestGrad),
        None => None,
    };
    let mut acc = mode.map(IterateAccumulator::new);
    if let Some(a) = acc
        .as_mut()
        .filter(|a| a.mode() == AccumulatorMode::BestGrad)
    {
        a.push(&x0, problem.gradient(&x0).norm());
    }

    let mut diagnostics = Diagnostics::default();
    diagnostics.reference_values.push((0, problem.value(&x0)));

    let first = measure(problem, &x0, reference, &state, wall());
    let initial_gap = first.f_gap;
    let target = budget.target.map(|t| match t {
        Target::Absolute(e) => e,
        Target::Relative(e) => e * first.metric(),
    });
    let mut traces = vec![first];
    let mut reached = target.is_some_and(|e| first.metric() <= e);
    let mut x_out = x0.clone();

    while !reached && !budget.exhausted(&state) {
        let report = methods::step(problem, cfg, &mut state)?;
        diagnostics.premise_checks += verify_local_premise(&report)?;
        if !report.local.is_empty() {
            diagnostics.local_steps.push(LocalStepRecord {
                iteration: state.server.iteration - 1,
                round: state
                    .server
                    .round
                    .saturating_sub(usize::from(report.communicated)),
                max_steps: report.local.iter().map(|l| l.steps).max().unwrap_or(0),
                total_steps: report.local.iter().map(|l| l.steps).sum(),
                tolerance: report.rule.and_then(|r| match r.kind {
                    StopKind::AbsGrad(e) | StopKind::RelGrad(e) => Some(e),
                    _ => None,
                }),
            });
        }
        if let Some(a) = acc.as_mut() {
            match a.mode() {
                AccumulatorMode::QWeighted(_) => a.push(&state.mean_client_iterate(), 0.0),
                _ => {
                    if let Some(sp) = &report.sampled_point {
                        let g = problem.gradient(sp).norm();
                        diagnostics.sampled_grad_norm_sq.push(g * g);
                        a.push(sp, g);
                    } else if report.communicated {
                        a.push(
                            &state.server.reference,
                            problem.gradient(&state.server.reference).norm(),
                        );
                    }
                }
            }
        }
        if report.communicated {
            diagnostics.reference_values.push((
                state.server.iteration,
                problem.value(&state.server.reference),
            ));
        }
        x_out = acc
            .as_ref()
            .and_then(|a| a.current().cloned())
            .unwrap_or_else(|| state.server.reference.clone());
        let t = measure(problem, &x_out, reference, &state, wall());
        if !t.grad_norm_sq.is_finite() {
            return Err(Error::NonFinite("monitored gradient"));
        }
        reached = target.is_some_and(|e| t.metric() <= e);
        let last = reached || budget.exhausted(&state);
        if report.communicated || state.server.iteration % options.record_every == 0 || last {
            traces.push(t);
        }
    }
    Ok(ExperimentResult {
        traces,
        reached,
        target,
        initial_gap,
        x_out,
        state,
        diagnostics,
    })
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
