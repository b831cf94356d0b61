//! Simulation laboratory for communication-efficient federated optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`], [`rng`] and [`oracle`]: vector arithmetic, deterministic
//!   hierarchical random streams and the client oracle interface.
//! * [`problems`]: synthetic quadratic(+sigmoid) instances, LIBSVM parsing,
//!   Dirichlet partitioning, regularized logistic regression and Hessian
//!   dissimilarity constants.
//! * [`local_solvers`]: inexact and exact minimization of per-client
//!   surrogates.
//! * [`methods`]: DANE+, FedRed, FedRed-(S)GD and the GD, Scaffold, Scaffnew
//!   and FedProx baselines, as step functions over server/client state.
//! * [`harness`]: experiment runner, traces, reference optima and rate
//!   certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod linalg;
pub mod local_solvers;
pub mod methods;
pub mod oracle;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::Vector;
pub use oracle::{ClientOracle, DistributedProblem};
pub use rng::RandomStream;
