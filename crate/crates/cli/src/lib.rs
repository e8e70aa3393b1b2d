//! Command-line front end: JSON space, problem and report files around the
//! solvers of `mrws-core`.
//!
//! Exit codes: 0 on success, 2 when a verification fails, 1 on usage, parse
//! and other errors.

pub mod commands;
pub mod error;
pub mod files;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mrws_core::poincare::{ShellMetric, DEFAULT_SEED};

use crate::commands::{Outcome, Which};
pub use crate::error::{CliError, CliResult};
use crate::files::TieBreakArg;

#[derive(Debug, Parser)]
#[command(name = "mrws", version, about = "Least gradient problems on finite random walk spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Write a JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the flat table of the result here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check invariance, reversibility and ergodicity of a space file.
    Validate {
        space: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact least gradient solution by parametric min cuts.
    Solve {
        problem: PathBuf,
        #[arg(long, value_enum)]
        tie_break: Option<TieBreakArg>,
        #[command(flatten)]
        output: Output,
    },
    /// p-Laplacian continuation towards p = 1.
    Plap {
        problem: PathBuf,
        /// Comma-separated, strictly decreasing exponents.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<f64>>,
        /// Tolerance on the trend of J along the schedule.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Find or verify a calibration of a solution.
    Calibrate {
        problem: PathBuf,
        /// Report whose `u` table is checked; the exact solution otherwise.
        #[arg(long)]
        u: Option<PathBuf>,
        /// Pair field to verify instead of searching.
        #[arg(long)]
        g_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum)]
        tie_break: Option<TieBreakArg>,
        #[command(flatten)]
        output: Output,
    },
    /// Median value property of a solution.
    Median {
        problem: PathBuf,
        #[arg(long)]
        u: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tau: f64,
        #[arg(long, value_enum)]
        tie_break: Option<TieBreakArg>,
        #[command(flatten)]
        output: Output,
    },
    /// Upper and lower estimates of the Poincaré constant.
    Poincare {
        problem: PathBuf,
        #[arg(long)]
        q: Option<f64>,
        /// `hop` or `width=W`.
        #[arg(long, default_value = "hop", value_parser = commands::parse_shells)]
        shells: ShellMetric,
        #[arg(long, default_value_t = 5)]
        starts: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Write a truncated counterexample space and problem.
    PaperExamples {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        n: usize,
        /// Directory receiving the space and problem files.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Re-evaluate the energies recorded in a report.
    Report {
        report: PathBuf,
        /// Problem file; defaults to the first input recorded in the report.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn execute(command: Command) -> CliResult<(Outcome, Output)> {
    Ok(match command {
        Command::Validate { space, tol, output } => (commands::validate(&space, tol)?, output),
        Command::Solve {
            problem,
            tie_break,
            output,
        } => (commands::solve(&problem, tie_break)?, output),
        Command::Plap {
            problem,
            schedule,
            tol,
            max_iter,
            output,
        } => (commands::plap(&problem, schedule, tol, max_iter)?, output),
        Command::Calibrate {
            problem,
            u,
            g_file,
            tol,
            tie_break,
            output,
        } => (
            commands::calibrate(&problem, u.as_deref(), g_file.as_deref(), tol, tie_break)?,
            output,
        ),
        Command::Median {
            problem,
            u,
            tau,
            tie_break,
            output,
        } => (commands::median(&problem, u.as_deref(), tau, tie_break)?, output),
        Command::Poincare {
            problem,
            q,
            shells,
            starts,
            seed,
            output,
        } => (commands::poincare(&problem, q, shells, starts, seed)?, output),
        Command::PaperExamples { which, n, dir, output } => (commands::paper_examples(which, n, &dir)?, output),
        Command::Report {
            report,
            problem,
            tol,
            output,
        } => (commands::report(&report, problem.as_deref(), tol)?, output),
    })
}

fn threads_from_env() -> CliResult<usize> {
    match std::env::var("MRWS_THREADS") {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("MRWS_THREADS must be a nonnegative integer, got {s:?}"))),
    }
}

fn run(argv: Vec<OsString>, out: &mut dyn Write) -> CliResult<i32> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return Ok(0);
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let threads = threads_from_env()?;
    if !mrws_core::par::init_threads(threads) {
        log::debug!("thread pool already initialised; MRWS_THREADS ignored");
    }
    let (outcome, output) = execute(cli.command)?;
    if let Some(path) = &output.out {
        files::write_atomic(path, &files::to_json(&outcome.report))?;
    }
    if let Some(path) = &output.csv {
        files::write_csv(path, &outcome.table)?;
    }
    for line in &outcome.lines {
        let _ = writeln!(out, "{line}");
    }
    Ok(if outcome.passed() { 0 } else { 2 })
}

/// Runs one command, writing its summary to `out` and diagnostics to `err`.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    match run(argv.into_iter().map(Into::into).collect(), out) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = write!(err, "{msg}");
            if !msg.ends_with('\n') {
                let _ = writeln!(err);
            }
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
