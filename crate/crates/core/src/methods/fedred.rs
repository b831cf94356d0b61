use super::config::{Averaging, MethodConfig};
use super::state::{per_client, streams, FederatedState};
use super::{aggregate, local_solve, StepReport};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::local_solvers::Surrogate;
use crate::oracle::DistributedProblem;

/// Coin `θ_k` and the index `i_k`, both drawn every iteration.
fn draw_coin_and_index(state: &FederatedState, p: f64, n: usize) -> (bool, usize) {
    let step = state.step_stream();
    let theta = step.fork(streams::THETA).bernoulli(p);
    let index = step.fork(streams::SELECT).next_index(n);
    (theta, index)
}

/// Shared tail of a FedRed-family iteration: store the new client iterates
/// and, when `θ_k = 1`, move the reference and schedule an `h` refresh.
fn finish_iteration(
    state: &mut FederatedState,
    solutions: Vec<Vector>,
    theta: bool,
    index: usize,
    averaging: Averaging,
) {
    if theta {
        let selected = (averaging == Averaging::Rand).then_some(index);
        state.server.reference = aggregate(&solutions, selected);
        state.server.comm_events += 1;
        state.server.round += 1;
        state.refresh_pending = true;
    }
    for (c, x) in state.clients.iter_mut().zip(solutions) {
        c.x = x;
    }
    state.server.iteration += 1;
}

fn ensure_fresh(problem: &DistributedProblem, state: &mut FederatedState) {
    if state.refresh_pending {
        let reference = state.server.reference.clone();
        state.refresh_control_variates(problem, &reference);
    }
}

/// One FedRed iteration: every client minimizes
/// `f_i − ⟨·, h_i⟩ + η/2‖· − x_i‖² + λ/2‖· − x̃‖²` from `x_i`; with
/// probability `p` the reference moves to the aggregate.
pub fn fedred_step(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let evals_before = state.grad_evals;
    ensure_fresh(problem, state);
    let n = problem.num_clients();
    let (theta, index) = draw_coin_and_index(state, cfg.p, n);
    let sampled_point = (cfg.averaging == Averaging::Rand).then(|| state.clients[index].x.clone());

    let rule = cfg.local.rule(state.server.iteration, cfg.lambda, cfg.mu)?;
    let reference = &state.server.reference;
    let clients = &state.clients;
    let solved = per_client(n, |i| {
        let x_i = &clients[i].x;
        let surrogate = Surrogate::new(problem.client(i))
            .with_control_variate(&clients[i].h)
            .with_prox(cfg.eta, x_i)
            .with_prox(cfg.lambda, reference);
        local_solve(&surrogate, x_i, &cfg.local, rule)
    })?;
    let (solutions, local): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    state.grad_evals += local.iter().map(|l| l.grad_evals as u64).sum::<u64>();
    finish_iteration(state, solutions, theta, index, cfg.averaging);
    Ok(StepReport {
        communicated: theta,
        grad_evals: state.grad_evals - evals_before,
        local,
        rule: Some(rule),
        selected: Some(index),
        sampled_point,
    })
}

/// Minimizer of the linearized FedRed surrogate:
/// `(η x_i + λ x̃ − (g − h)) / (η + λ)`.
pub fn fedred_gd_update(
    x_i: &Vector,
    reference: &Vector,
    g: &Vector,
    h: &Vector,
    eta: f64,
    lambda: f64,
) -> Result<Vector> {
    let total = eta + lambda;
    if !(total > 0.0) {
        return Err(Error::config("fedred_gd needs eta + lambda > 0"));
    }
    let combined = linalg::axpy_combine(&[eta, lambda, -1.0, 1.0], &[x_i, reference, g, h])?;
    Ok(combined / total)
}

/// One FedRed-(S)GD iteration: a single closed-form local step per client.
pub fn fedred_gd_step(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let evals_before = state.grad_evals;
    ensure_fresh(problem, state);
    let n = problem.num_clients();
    let (theta, index) = draw_coin_and_index(state, cfg.p, n);
    let sampled_point = (cfg.averaging == Averaging::Rand).then(|| state.clients[index].x.clone());

    let step = state.step_stream();
    let reference = &state.server.reference;
    let clients = &state.clients;
    let solutions = per_client(n, |i| {
        let client = problem.client(i);
        let x_i = &clients[i].x;
        let g = if cfg.stochastic {
            client.stochastic_gradient(x_i, &mut step.fork(streams::CLIENT_BASE + i as u64))
        } else {
            client.gradient(x_i)
        };
        linalg::ensure_finite(&g, "client gradient")?;
        fedred_gd_update(x_i, reference, &g, &clients[i].h, cfg.eta, cfg.lambda)
    })?;
    state.grad_evals += n as u64;
    finish_iteration(state, solutions, theta, index, cfg.averaging);
    Ok(StepReport {
        communicated: theta,
        grad_evals: state.grad_evals - evals_before,
        local: Vec::new(),
        rule: None,
        selected: Some(index),
        sampled_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn closed_form_examples() {
        let x = dvector![2.0];
        let r = dvector![0.0];
        let z = dvector![0.0];
        assert_eq!(
            fedred_gd_update(&x, &r, &z, &z, 1.0, 1.0).unwrap(),
            dvector![1.0]
        );
        assert_eq!(
            fedred_gd_update(&x, &r, &dvector![1.0], &z, 1.0, 1.0).unwrap(),
            dvector![0.5]
        );
        assert!(matches!(
            fedred_gd_update(&x, &r, &z, &z, 0.0, 0.0),
            Err(Error::Config(_))
        ));
    }
}
