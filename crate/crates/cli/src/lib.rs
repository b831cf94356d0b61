//! Configuration-driven runner for federated optimization experiments.
//!
//! `fedlab run --config exp.json` writes one trace CSV per (method, seed), a
//! `summary.csv` and two convergence plots; `fedlab delta --config exp.json`
//! reports the Hessian dissimilarity constants of the configured problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{DeltaArgs, RunArgs};

#[derive(Debug, Parser)]
#[command(
    name = "fedlab",
    version,
    about = "Run federated optimization experiments from JSON configs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured method and write traces, a summary and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads shared by all runs.
        #[arg(long, env = "FEDLAB_WORKERS")]
        workers: Option<usize>,
        /// Base seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Record elapsed wall-clock time in the `wall_ms` column.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Print the dissimilarity constants of the configured problem.
    Delta {
        #[arg(long)]
        config: PathBuf,
        /// Point pairs for the sampled estimator.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parse `args` (including the program name), run the command and return the
/// process exit code: 0 on success, 1 on runtime failure, 2 on bad input.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
            wall_clock,
        } => {
            let args = RunArgs {
                config,
                out,
                workers: workers.filter(|w| *w > 0).unwrap_or_else(default_workers),
                seed,
                wall_clock,
            };
            commands::run(&args, stdout)
        }
        Command::Delta { config, pairs } => commands::delta(&DeltaArgs { config, pairs }, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
