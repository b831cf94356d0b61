//! Reference baselines: gradient descent, Scaffold, Scaffnew and FedProx.

use super::config::MethodConfig;
use super::state::{per_client, streams, FederatedState};
use super::{aggregate, local_solve, StepReport};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::local_solvers::Surrogate;
use crate::oracle::DistributedProblem;

/// `cfg.step_size`, else `1/L` with `L` the smoothness of `f`.
pub fn default_step(problem: &DistributedProblem, cfg: &MethodConfig) -> Result<f64> {
    if let Some(s) = cfg.step_size {
        return Ok(s);
    }
    let c = problem.constants();
    match c.global_smoothness.or(c.smoothness) {
        Some(l) if l > 0.0 => Ok(1.0 / l),
        _ => Err(Error::config(
            "step_size is required when the smoothness constant is unknown",
        )),
    }
}

fn round_report(grad_evals: u64) -> StepReport {
    StepReport {
        communicated: true,
        grad_evals,
        local: Vec::new(),
        rule: None,
        selected: None,
        sampled_point: None,
    }
}

fn close_round(state: &mut FederatedState, x_next: Vector) {
    for c in state.clients.iter_mut() {
        c.x = x_next.clone();
    }
    state.server.reference = x_next;
    state.server.round += 1;
    state.server.iteration += 1;
    state.server.comm_events += 1;
}

/// `x^{r+1} = x^r − γ ∇f(x^r)`.
pub fn baseline_gd_round(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let gamma = default_step(problem, cfg)?;
    let x = &state.server.reference;
    let grads = per_client(problem.num_clients(), |i| Ok(problem.client(i).gradient(x)))?;
    let g = linalg::mean(&grads);
    linalg::ensure_finite(&g, "gradient")?;
    let mut x_next = x.clone();
    x_next.axpy(-gamma, &g, 1.0);
    let n = problem.num_clients() as u64;
    state.grad_evals += n;
    close_round(state, x_next);
    Ok(round_report(n))
}

/// Refresh `h_i` at `x^r`, run `K` corrected local steps
/// `x ← x − γ(∇f_i(x) − h_i)` per client, then average. The refresh
/// gradient doubles as the first local gradient.
pub fn baseline_scaffold_round(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let gamma = default_step(problem, cfg)?;
    let evals_before = state.grad_evals;
    let x_r = state.server.reference.clone();
    let grads = state.refresh_control_variates(problem, &x_r);
    let k = cfg.local_steps;
    let clients = &state.clients;
    let locals = per_client(problem.num_clients(), |i| {
        let client = problem.client(i);
        let h = &clients[i].h;
        let mut x = x_r.clone();
        for t in 0..k {
            let g = if t == 0 {
                grads[i].clone()
            } else {
                client.gradient(&x)
            };
            x.axpy(-gamma, &(g - h), 1.0);
        }
        linalg::ensure_finite(&x, "scaffold local iterate")?;
        Ok(x)
    })?;
    state.grad_evals += (problem.num_clients() * (k - 1)) as u64;
    let x_next = linalg::mean(&locals);
    close_round(state, x_next);
    Ok(round_report(state.grad_evals - evals_before))
}

/// ProxSkip-style step: `x̂_i = x_i − γ(∇f_i(x_i) − h_i)`; with probability
/// `p` all clients move to `x̄ = mean(x̂)` and `h_i += (p/γ)(x̄ − x̂_i)`.
pub fn baseline_scaffnew_step(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let gamma = default_step(problem, cfg)?;
    let n = problem.num_clients();
    let theta = state.step_stream().fork(streams::THETA).bernoulli(cfg.p);
    let clients = &state.clients;
    let hats = per_client(n, |i| {
        let c = &clients[i];
        let g = problem.client(i).gradient(&c.x);
        let mut x = c.x.clone();
        x.axpy(-gamma, &(g - &c.h), 1.0);
        linalg::ensure_finite(&x, "scaffnew local iterate")?;
        Ok(x)
    })?;
    state.grad_evals += n as u64;
    if theta {
        let x_bar = linalg::mean(&hats);
        let scale = cfg.p / gamma;
        for (c, x_hat) in state.clients.iter_mut().zip(&hats) {
            c.h.axpy(scale, &(&x_bar - x_hat), 1.0);
            c.x = x_bar.clone();
        }
        state.server.reference = x_bar;
        state.server.comm_events += 1;
        state.server.round += 1;
    } else {
        for (c, x_hat) in state.clients.iter_mut().zip(hats) {
            c.x = x_hat;
        }
    }
    state.server.iteration += 1;
    Ok(StepReport {
        communicated: theta,
        grad_evals: n as u64,
        local: Vec::new(),
        rule: None,
        selected: None,
        sampled_point: None,
    })
}

/// Each client minimizes `f_i + λ/2‖· − x^r‖²` from `x^r`; the server averages.
pub fn baseline_fedprox_round(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let x_r = state.server.reference.clone();
    let rule = cfg.local.rule(state.server.round, cfg.lambda, cfg.mu)?;
    let solved = per_client(problem.num_clients(), |i| {
        let surrogate = Surrogate::new(problem.client(i)).with_prox(cfg.lambda, &x_r);
        local_solve(&surrogate, &x_r, &cfg.local, rule)
    })?;
    let (solutions, local): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let evals: u64 = local.iter().map(|l| l.grad_evals as u64).sum();
    state.grad_evals += evals;
    let x_next = aggregate(&solutions, None);
    close_round(state, x_next);
    Ok(StepReport {
        communicated: true,
        grad_evals: evals,
        local,
        rule: Some(rule),
        selected: None,
        sampled_point: None,
    })
}
