//! Experiment runner, reference optima, traces and convergence certificates.

mod certificates;
mod reference;
mod runner;
mod trace;

pub use certificates::{
    check_rate_certificates, convex_exact_bound, convex_inexact_bound, expected_sampled_grad,
    fedred_gd_nonconvex_bound, nonconvex_min_grad_bound, CertificateConstants, CertificateKind,
    CertificateReport, Violation,
};
pub use reference::{reference_optimum, ReferenceMethod, ReferenceSolution, REFERENCE_TOLERANCE};
pub use runner::{
    run_experiment, with_workers, Budget, Diagnostics, ExperimentResult, LocalStepRecord,
    RunOptions, Target, DEFAULT_RECORD_EVERY,
};
pub use trace::{
    grad_evals_to_target, read_trace_csv, rounds_to_target, write_trace_csv, RoundTrace, CSV_HEADER,
};
