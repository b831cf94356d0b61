use rayon::prelude::*;

use super::config::{ControlVariate, MethodConfig, MethodKind};
use super::control_variate::control_variate_grad_diff;
use crate::error::Result;
use crate::linalg::{self, Vector};
use crate::oracle::DistributedProblem;
use crate::rng::RandomStream;

/// Sub-stream labels under the per-iteration stream `[k]`.
pub mod streams {
    pub const THETA: u64 = 0;
    pub const SELECT: u64 = 1;
    /// Client `i` uses label `CLIENT_BASE + i`.
    pub const CLIENT_BASE: u64 = 16;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    /// `x^r` for round methods, `x̃_k` for the FedRed family.
    pub reference: Vector,
    pub round: usize,
    pub iteration: usize,
    pub comm_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub x: Vector,
    pub h: Vector,
}

#[derive(Debug, Clone)]
pub struct FederatedState {
    pub server: ServerState,
    pub clients: Vec<ClientState>,
    /// Client gradient evaluations charged so far.
    pub grad_evals: u64,
    /// Control variates must be recomputed at the reference before use.
    pub refresh_pending: bool,
    root: RandomStream,
}

impl FederatedState {
    /// All clients start at `x0`.
    ///
    /// Scaffnew and the recursive DANE+ variant carry their control variates
    /// across communication, so they are seeded with grad-diff at `x0` (and
    /// charged). The FedRed family refreshes lazily before its first step.
    pub fn initialize(
        problem: &DistributedProblem,
        cfg: &MethodConfig,
        x0: &Vector,
        seed: u64,
    ) -> Result<Self> {
        linalg::check_dim(x0, problem.dim())?;
        linalg::ensure_finite(x0, "initial point")?;
        let n = problem.num_clients();
        let mut state = Self {
            server: ServerState {
                reference: x0.clone(),
                round: 0,
                iteration: 0,
                comm_events: 0,
            },
            clients: vec![
                ClientState {
                    x: x0.clone(),
                    h: Vector::zeros(x0.len()),
                };
                n
            ],
            grad_evals: 0,
            refresh_pending: matches!(cfg.method, MethodKind::FedRed | MethodKind::FedRedGd),
            root: RandomStream::new(seed),
        };
        let carries_h = cfg.method == MethodKind::Scaffnew
            || matches!(cfg.control_variate, ControlVariate::Recursive { .. })
                && cfg.method == MethodKind::DanePlus;
        if carries_h {
            state.refresh_control_variates(problem, &x0.clone());
        }
        Ok(state)
    }

    pub fn seed(&self) -> u64 {
        self.root.seed()
    }

    /// Stream of iteration `k`; every random choice of that step forks from it.
    pub fn step_stream(&self) -> RandomStream {
        self.root.fork(self.server.iteration as u64)
    }

    /// Grad-diff control variates at `point`; returns the client gradients.
    pub fn refresh_control_variates(
        &mut self,
        problem: &DistributedProblem,
        point: &Vector,
    ) -> Vec<Vector> {
        let (hs, grads) = control_variate_grad_diff(problem, point);
        for (c, h) in self.clients.iter_mut().zip(hs) {
            c.h = h;
        }
        self.grad_evals += problem.num_clients() as u64;
        self.refresh_pending = false;
        grads
    }

    pub fn mean_client_iterate(&self) -> Vector {
        let xs: Vec<Vector> = self.clients.iter().map(|c| c.x.clone()).collect();
        linalg::mean(&xs)
    }

    /// `(1/n) Σ h_i`.
    pub fn mean_control_variate(&self) -> Vector {
        let hs: Vec<Vector> = self.clients.iter().map(|c| c.h.clone()).collect();
        linalg::mean(&hs)
    }
}

/// `f(i)` for every client, in parallel, collected in client order.
pub(crate) fn per_client<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}
