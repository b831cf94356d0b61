//! `run` and `delta` subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fedlab::harness::{
    self, Budget, ExperimentResult, ReferenceSolution, RoundTrace, RunOptions, Target,
};
use fedlab::methods::{self, MethodConfig, ProblemSummary, Regime};
use fedlab::problems::{
    self, DeltaMethod, DissimilarityReport, LogisticOptions, QuadraticClientSpec,
    QuadraticDissimilarity, QuadraticInstance, SymmetricMatrix,
};
use fedlab::{DistributedProblem, RandomStream, Vector};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig, MethodEntry, ProblemConfig};
use crate::plot::{line_plot_svg, Series};

/// Stream label for the sampled dissimilarity estimator.
const DELTA_STREAM: u64 = 0xde17a;

/// Point pairs for the sampled estimator when none are configured.
pub const DEFAULT_DELTA_PAIRS: usize = 100;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CommandError {
    /// Exit code 2.
    Config(ConfigError),
    /// Exit code 1.
    Runtime(anyhow::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "{e}"),
            CommandError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Runtime(e)
    }
}

/// Core errors that stem from the configured inputs rather than from the
/// numerics.
fn input_error(path: &str, e: fedlab::Error) -> CommandError {
    match e {
        fedlab::Error::Config(_)
        | fedlab::Error::Dimension { .. }
        | fedlab::Error::Parse { .. }
        | fedlab::Error::Contract(_)
        | fedlab::Error::Unsupported(_) => {
            CommandError::Config(ConfigError::at(path, e.to_string()))
        }
        other => CommandError::Runtime(other.into()),
    }
}

pub struct BuiltProblem {
    pub problem: DistributedProblem,
    /// Closed-form constants, for quadratic families.
    pub quadratic: Option<QuadraticDissimilarity>,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem, CommandError> {
    match &cfg.problem {
        ProblemConfig::Quadratic { generator, seed } => {
            let inst = problems::gen_quadratic_problem(generator, *seed)
                .map_err(|e| input_error("problem.generator", e))?;
            Ok(BuiltProblem {
                quadratic: Some(inst.dissimilarity),
                problem: inst.problem,
            })
        }
        ProblemConfig::Matrices { clients } => {
            let mut specs = Vec::with_capacity(clients.len());
            for (i, c) in clients.iter().enumerate() {
                let path = format!("problem.clients[{i}]");
                let mut matrices = Vec::with_capacity(c.matrices.len());
                for (j, rows) in c.matrices.iter().enumerate() {
                    let d = rows.len();
                    if d == 0 || rows.iter().any(|r| r.len() != d) {
                        return Err(ConfigError::at(
                            format!("{path}.matrices[{j}]"),
                            "matrix must be square and non-empty",
                        )
                        .into());
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    let m = SymmetricMatrix::dense(DMatrix::from_row_slice(d, d, &flat))
                        .map_err(|e| input_error(&format!("{path}.matrices[{j}]"), e))?;
                    matrices.push(m);
                }
                let d = matrices[0].dim();
                let centers = match &c.centers {
                    Some(cs) => cs.iter().map(|b| Vector::from_column_slice(b)).collect(),
                    None => vec![Vector::zeros(d); matrices.len()],
                };
                specs.push(QuadraticClientSpec {
                    matrices,
                    centers,
                    sigmoid_weight: 0.0,
                });
            }
            let inst = QuadraticInstance::from_specs("matrices", specs, 0.0)
                .map_err(|e| input_error("problem.clients", e))?;
            Ok(BuiltProblem {
                quadratic: Some(inst.dissimilarity),
                problem: inst.problem,
            })
        }
        ProblemConfig::Logistic {
            dataset,
            clients,
            alpha,
            seed,
            regularization,
            batch_size,
        } => {
            let data = problems::read_libsvm_file(dataset)
                .map_err(|e| input_error("problem.dataset", e))?;
            let parts =
                problems::dirichlet_partition(&data, *clients, *alpha, &RandomStream::new(*seed))
                    .map_err(|e| input_error("problem", e))?;
            let options = LogisticOptions {
                regularization: *regularization,
                batch_size: *batch_size,
            };
            let problem = problems::logistic_problem(&parts, options)
                .map_err(|e| input_error("problem", e))?;
            Ok(BuiltProblem {
                problem,
                quadratic: None,
            })
        }
    }
}

/// The dissimilarity report `auto` methods consume: the norm-mean formula
/// for quadratic problems and a sampled estimate otherwise, unless the
/// config names a method.
pub fn dissimilarity_for(
    cfg: &ExperimentConfig,
    built: &BuiltProblem,
    pairs: Option<usize>,
) -> DissimilarityReport {
    let method = cfg.delta.unwrap_or(if built.quadratic.is_some() {
        DeltaMethod::PaperFormula
    } else {
        DeltaMethod::Sampled
    });
    if let Some(r) = built.quadratic.and_then(|q| q.get(method)) {
        return r;
    }
    let pairs = pairs.or(cfg.delta_pairs).unwrap_or(DEFAULT_DELTA_PAIRS);
    problems::delta_sampled(
        &built.problem,
        pairs,
        &RandomStream::new(cfg.seed).fork(DELTA_STREAM),
    )
}

fn regime(problem: &DistributedProblem) -> Regime {
    match problem.constants().convexity {
        Some(mu) if mu > 0.0 => Regime::StronglyConvex,
        Some(_) => Regime::Convex,
        None => Regime::Nonconvex,
    }
}

/// One `MethodConfig` per entry of `cfg.methods`.
pub fn resolve_methods(
    cfg: &ExperimentConfig,
    built: &BuiltProblem,
    reference: Option<&ReferenceSolution>,
) -> Result<Vec<MethodConfig>, CommandError> {
    let problem = &built.problem;
    let constants = problem.constants();
    let x0 = Vector::zeros(problem.dim());
    let f_x0 = problem.value(&x0);
    let initial_gap = reference
        .map(|r| f_x0 - r.f)
        .or_else(|| constants.value_lower_bound.map(|lb| f_x0 - lb));
    let mut delta = None;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for (i, entry) in cfg.methods.iter().enumerate() {
        let path = format!("methods[{i}]");
        let mc = match entry {
            MethodEntry::Explicit(e) => e.config,
            MethodEntry::Auto(a) => {
                let delta = *delta.get_or_insert_with(|| dissimilarity_for(cfg, built, None));
                let summary = ProblemSummary {
                    delta,
                    smoothness: constants.smoothness,
                    mu: constants.convexity.unwrap_or(0.0),
                    gradient_variance: constants.gradient_variance,
                    epsilon: match cfg.budget.target {
                        Some(Target::Absolute(e)) => Some(e),
                        Some(Target::Relative(e)) => initial_gap.map(|g| e * g),
                        None => None,
                    },
                    horizon: cfg.budget.max_iterations,
                    initial_gap,
                };
                let mut mc =
                    methods::suggest_parameters(a.method, regime(problem), &summary, a.rule)
                        .map_err(|e| input_error(&format!("{path}.auto"), e))?;
                if let Some(q) = a.q_weighting {
                    mc.q_weighting = q;
                }
                if let Some(local) = a.local {
                    mc.local = local;
                }
                mc.validate()
                    .map_err(|e| input_error(&format!("{path}.auto"), e))?;
                mc
            }
        };
        out.push(mc);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub seed: Option<u64>,
    pub wall_clock: bool,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub seed: u64,
    pub metric: String,
    pub target: Option<f64>,
    pub reached: bool,
    pub rounds_to_target: Option<usize>,
    pub grad_evals_to_target: Option<u64>,
    pub final_k: usize,
    pub final_rounds: usize,
    pub final_grad_evals: u64,
    pub final_metric: f64,
}

pub fn trace_file_name(label: &str, seed: u64) -> String {
    format!("{label}_seed{seed}.csv")
}

pub fn summary_row(label: &str, seed: u64, result: &ExperimentResult, metric: &str) -> SummaryRow {
    let last = result.traces.last().copied().unwrap_or(RoundTrace {
        k: 0,
        rounds: 0,
        grad_evals: 0,
        f_gap: None,
        grad_norm_sq: f64::NAN,
        dist_sq: None,
        wall_ms: None,
    });
    SummaryRow {
        method: label.to_string(),
        seed,
        metric: metric.to_string(),
        target: result.target,
        reached: result.reached,
        rounds_to_target: result
            .target
            .and_then(|e| harness::rounds_to_target(&result.traces, e)),
        grad_evals_to_target: result
            .target
            .and_then(|e| harness::grad_evals_to_target(&result.traces, e)),
        final_k: last.k,
        final_rounds: last.rounds,
        final_grad_evals: last.grad_evals,
        final_metric: last.metric(),
    }
}

pub fn run(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CommandError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let built = build_problem(&cfg)?;
    let problem = &built.problem;
    let x0 = Vector::zeros(problem.dim());
    let reference = if problem.is_convex() {
        Some(harness::reference_optimum(problem, &x0).context("computing the reference optimum")?)
    } else {
        None
    };
    let method_cfgs = resolve_methods(&cfg, &built, reference.as_ref())?;
    let labels = cfg.method_labels();
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let jobs: Vec<(usize, u64)> = (0..method_cfgs.len())
        .flat_map(|m| (0..cfg.repeats as u64).map(move |r| (m, cfg.seed + r)))
        .collect();
    let budget: Budget = cfg.budget;
    let results: Vec<Result<ExperimentResult, fedlab::Error>> =
        harness::with_workers(args.workers, || {
            jobs.par_iter()
                .map(|&(m, seed)| {
                    let options = RunOptions {
                        x0: Some(x0.clone()),
                        seed,
                        record_every: cfg.record_every,
                        wall_clock: args.wall_clock,
                    };
                    harness::run_experiment(
                        problem,
                        &method_cfgs[m],
                        &budget,
                        &options,
                        reference.as_ref(),
                    )
                })
                .collect()
        })
        .map_err(|e| CommandError::Runtime(e.into()))?;

    let metric = if reference.is_some() {
        "f_gap"
    } else {
        "grad_norm_sq"
    };
    let mut rows = Vec::with_capacity(jobs.len());
    let mut by_rounds = Vec::new();
    let mut by_evals = Vec::new();
    for (&(m, seed), result) in jobs.iter().zip(results) {
        let label = &labels[m];
        let result = result.with_context(|| format!("running {label} with seed {seed}"))?;
        let path = out_dir.join(trace_file_name(label, seed));
        let file =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        harness::write_trace_csv(std::io::BufWriter::new(file), &result.traces)
            .with_context(|| format!("writing {}", path.display()))?;
        let legend = seed == cfg.seed;
        let series = |x: fn(&RoundTrace) -> f64| Series {
            label: label.clone(),
            color: m,
            legend,
            points: result.traces.iter().map(|t| (x(t), t.metric())).collect(),
        };
        by_rounds.push(series(|t| t.rounds as f64));
        by_evals.push(series(|t| t.grad_evals as f64));
        rows.push(summary_row(label, seed, &result, metric));
    }

    let summary_path = out_dir.join("summary.csv");
    write_summary(&summary_path, &rows)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    let title = cfg
        .name
        .clone()
        .unwrap_or_else(|| problem.name().to_string());
    for (name, series, x_label) in [
        ("convergence_rounds.svg", &by_rounds, "communication rounds"),
        (
            "convergence_gradevals.svg",
            &by_evals,
            "client gradient evaluations",
        ),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, line_plot_svg(series, &title, x_label, metric))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print_summary(stdout, &title, metric, &rows).context("writing to stdout")?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> anyhow::Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn print_summary(
    out: &mut dyn Write,
    title: &str,
    metric: &str,
    rows: &[SummaryRow],
) -> std::io::Result<()> {
    writeln!(out, "{title}")?;
    let target = rows.iter().find_map(|r| r.target);
    match target {
        Some(t) => writeln!(out, "target: {metric} <= {t:e}")?,
        None => writeln!(out, "no target set; reporting final {metric}")?,
    }
    let width = rows
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(6)
        .max(6);
    writeln!(
        out,
        "{:<width$}  {:>6}  {:>7}  {:>16}  {:>20}  {:>12}",
        "method", "seed", "reached", "rounds_to_target", "grad_evals_to_target", "final_metric"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<width$}  {:>6}  {:>7}  {:>16}  {:>20}  {:>12.4e}",
            r.method,
            r.seed,
            if r.reached { "yes" } else { "no" },
            opt(r.rounds_to_target),
            opt(r.grad_evals_to_target),
            r.final_metric
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DeltaArgs {
    pub config: PathBuf,
    pub pairs: Option<usize>,
}

pub fn delta(args: &DeltaArgs, stdout: &mut dyn Write) -> Result<(), CommandError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if args.pairs == Some(0) {
        return Err(ConfigError::at("--pairs", "must be at least 1").into());
    }
    let built = build_problem(&cfg)?;
    let problem = &built.problem;
    writeln!(
        stdout,
        "problem: {} (n = {}, d = {})",
        problem.name(),
        problem.num_clients(),
        problem.dim()
    )
    .context("writing to stdout")?;
    let mut reports = Vec::new();
    let json = match built.quadratic {
        Some(q) => {
            reports.push(("exact", q.exact));
            reports.push(("paper_formula", q.paper_formula));
            serde_json::json!({ "exact": q.exact, "paper_formula": q.paper_formula })
        }
        None => {
            let pairs = args
                .pairs
                .or(cfg.delta_pairs)
                .unwrap_or(DEFAULT_DELTA_PAIRS);
            let r = dissimilarity_for(&cfg, &built, Some(pairs));
            writeln!(stdout, "sampled estimate from {pairs} point pairs")
                .context("writing to stdout")?;
            reports.push(("sampled", r));
            serde_json::json!({ "sampled": r, "pairs": pairs })
        }
    };
    write_delta_table(stdout, &reports).context("writing to stdout")?;
    writeln!(stdout, "{json}").context("writing to stdout")?;
    Ok(())
}

fn write_delta_table(
    out: &mut dyn Write,
    reports: &[(&str, DissimilarityReport)],
) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<14}  {:>12}  {:>12}",
        "method", "delta_a", "delta_b"
    )?;
    for (name, r) in reports {
        writeln!(
            out,
            "{:<14}  {:>12.6}  {:>12.6}",
            name, r.delta_a, r.delta_b
        )?;
    }
    Ok(())
}
