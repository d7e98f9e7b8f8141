use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;

/// Routing and appointment scheduling under uncertain service and travel times.
///
/// Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
/// The solver backend defaults to in-process HiGHS; set HRAS_SOLVER (or
/// --solver) to the path of an external command to use it instead.
#[derive(Debug, Parser)]
#[command(name = "hras", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance, a training sample and optionally an out-of-sample set
    Gen(RunConfig),
    /// Solve one model on an instance and scenario file
    Solve(SolveArgs),
    /// Evaluate a decision on a scenario file
    Evaluate(EvaluateArgs),
    /// Out-of-sample cost of the Wasserstein model over a radius grid
    Sweep(RunConfig),
    /// Fraction of instances whose model value covers the out-of-sample cost
    Reliability(RunConfig),
    /// Compare several models over replications
    Report(RunConfig),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON written by `gen`
    #[arg(long)]
    instance: PathBuf,
    /// Training scenarios (.json or .csv)
    #[arg(long)]
    scenarios: PathBuf,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Decision JSON written by `solve`
    #[arg(long)]
    decision: PathBuf,
    /// Scenarios to evaluate on (.json or .csv)
    #[arg(long)]
    scenarios: PathBuf,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Solver(m) => write!(f, "solver error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(run) => RunConfig::resolve(run).and_then(|c| commands::gen(&c)),
        Command::Solve(a) => RunConfig::resolve(&a.run).and_then(|c| commands::solve(&a.instance, &a.scenarios, &c)),
        Command::Evaluate(a) => {
            RunConfig::resolve(&a.run).and_then(|c| commands::evaluate(&a.instance, &a.decision, &a.scenarios, &c))
        }
        Command::Sweep(run) => RunConfig::resolve(run).and_then(|c| commands::sweep(&c)),
        Command::Reliability(run) => RunConfig::resolve(run).and_then(|c| commands::reliability(&c)),
        Command::Report(run) => RunConfig::resolve(run).and_then(|c| commands::report(&c)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hras: {e}");
            ExitCode::from(e.code())
        }
    }
}
