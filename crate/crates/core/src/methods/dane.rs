use super::config::{Averaging, ControlVariate, MethodConfig};
use super::control_variate::control_variate_recursive_update;
use super::state::{per_client, streams, FederatedState};
use super::{aggregate, local_solve, StepReport};
use crate::error::Result;
use crate::local_solvers::Surrogate;
use crate::oracle::DistributedProblem;

/// One DANE+ round: refresh `h_i` at `x^r`, let every client minimize
/// `f_i − ⟨·, h_i⟩ + λ/2‖· − x^r‖²` from `x^r`, then aggregate.
pub fn dane_plus_round(
    problem: &DistributedProblem,
    cfg: &MethodConfig,
    state: &mut FederatedState,
) -> Result<StepReport> {
    let evals_before = state.grad_evals;
    let x_r = state.server.reference.clone();
    if cfg.control_variate == ControlVariate::GradDiff {
        state.refresh_control_variates(problem, &x_r);
    }
    let rule = cfg.local.rule(state.server.round, cfg.lambda, cfg.mu)?;
    let clients = &state.clients;
    let solved = per_client(problem.num_clients(), |i| {
        let surrogate = Surrogate::new(problem.client(i))
            .with_control_variate(&clients[i].h)
            .with_prox(cfg.lambda, &x_r);
        local_solve(&surrogate, &x_r, &cfg.local, rule)
    })?;
    let (solutions, local): (Vec<_>, Vec<_>) = solved.into_iter().unzip();

    let mut stream = state.step_stream().fork(streams::SELECT);
    let selected = (cfg.averaging == Averaging::Rand).then(|| stream.next_index(solutions.len()));
    let x_next = aggregate(&solutions, selected);

    if let ControlVariate::Recursive { m } = cfg.control_variate {
        for (c, x_i) in state.clients.iter_mut().zip(&solutions) {
            c.h = control_variate_recursive_update(&c.h, &x_next, x_i, m);
        }
    }
    for (c, x_i) in state.clients.iter_mut().zip(solutions) {
        c.x = x_i;
    }
    state.grad_evals += local.iter().map(|l| l.grad_evals as u64).sum::<u64>();
    state.server.reference = x_next;
    state.server.round += 1;
    state.server.iteration += 1;
    state.server.comm_events += 1;
    Ok(StepReport {
        communicated: true,
        grad_evals: state.grad_evals - evals_before,
        local,
        rule: Some(rule),
        selected,
        sampled_point: None,
    })
}
