//! `gridrestore`: solve, validate and enumerate restoration plans.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gridrestore", version, about = "Service restoration planning for radial distribution networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a restoration plan and write plan.json, margins.json,
    /// trace.csv and summary.json.
    Solve(SolveArgs),
    /// Check a plan with an exact power flow; exits 5 on limit violations.
    Validate(ValidateArgs),
    /// Exhaustive search over radial configurations (small instances only).
    Enumerate(EnumerateArgs),
}

#[derive(Args, Debug, Clone)]
struct Inputs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "gridrestore-out")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Mcb,
    Iao,
}

#[derive(Args, Debug, Clone)]
struct Tuning {
    /// Objective weights `w_re,w_sw,w_op`.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 3]>,
    /// Stop when UB − LB falls to this many objective units.
    #[arg(long)]
    eps_opt: Option<f64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// Worker threads for unit subproblems; 1 runs them serially.
    #[arg(long)]
    parallel: Option<usize>,
    /// Recorded in the summary; every solver is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = Method::Mcb)]
    method: Method,
    #[command(flatten)]
    tuning: Tuning,
    /// Minimize reliability, then switching, then losses in turn (iao only).
    #[arg(long)]
    lexicographic: bool,
    /// Write the optimization models as text under `<out>/models`.
    #[arg(long)]
    dump_models: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Where to write the margin report (JSON).
    #[arg(long, default_value = "margins.json")]
    report: PathBuf,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, default_value_t = gridrestore::solve::MAX_ENUM_LINES)]
    max_lines: usize,
    #[arg(long, default_value_t = gridrestore::solve::MAX_ENUM_BREAKERS)]
    max_breakers: usize,
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated weights".to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDRESTORE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Validate(a) => commands::validate(a),
        Command::Enumerate(a) => commands::enumerate(a),
    };
    match outcome {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code.into()
        }
    }
}
