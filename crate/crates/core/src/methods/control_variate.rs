use rayon::prelude::*;

use crate::linalg::{self, Vector};
use crate::oracle::DistributedProblem;

/// `h_i = ∇f_i(point) − ∇f(point)` for every client, plus the raw client
/// gradients. Costs one gradient per client; `∇f` is their mean.
pub fn control_variate_grad_diff(
    problem: &DistributedProblem,
    point: &Vector,
) -> (Vec<Vector>, Vec<Vector>) {
    let grads: Vec<Vector> = problem
        .clients()
        .par_iter()
        .map(|c| c.gradient(point))
        .collect();
    let mean = linalg::mean(&grads);
    let hs = grads.iter().map(|g| g - &mean).collect();
    (hs, grads)
}

/// `h_i + m (x_new_global − x_i_new)`.
pub fn control_variate_recursive_update(
    h: &Vector,
    x_new_global: &Vector,
    x_i_new: &Vector,
    m: f64,
) -> Vector {
    if m == 0.0 {
        return h.clone();
    }
    let mut out = h.clone();
    out.axpy(m, x_new_global, 1.0);
    out.axpy(-m, x_i_new, 1.0);
    out
}
