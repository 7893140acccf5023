//! Command-line front end: one command per invocation, JSON report on
//! stdout (or `--out`), diagnostics on stderr.
//!
//! Exit codes: 0 verdict true / check passed, 1 verdict false / check
//! failed, 2 invalid config or usage, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qhs::cli::{
    config_sha256, error_exit_code, run_command, Command, Overrides, ProblemConfig,
};
use qhs::solvers::SolveMethod;
use qhs::Error;

#[derive(Parser)]
#[command(name = "qhs", version, about = "Verify and solve nonsmooth Nash-type equilibrium systems")]
struct CliArgs {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a config file.
    Validate(Common),
    /// Check the per-player inequalities at a point (requires --at).
    Verify(Common),
    /// Run the best-response relaxation (truncated pathway when unbounded).
    Solve(Common),
    /// Run the brute-force grid oracle (truncated pathway when unbounded).
    Oracle(Common),
    /// Sample convex combinations against the covering property.
    Audit(Common),
    /// Sample the coercivity condition outside the compact core.
    Coercivity(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the problem config (JSON, see schemas/problem.schema.json).
    #[arg(long)]
    config: PathBuf,
    /// Point for verify/solve, e.g. "(0.5, -0.5)" or "0.5,-0.5".
    #[arg(long)]
    at: Option<String>,
    /// Solver method override: grid | best_response.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(text: &str) -> Result<Vec<f64>, Error> {
    let trimmed = text
        .trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches([')', ']']);
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse coordinate `{part}`")))
        })
        .collect()
}

fn parse_method(text: &str) -> Result<SolveMethod, Error> {
    match text {
        "grid" => Ok(SolveMethod::Grid),
        "best_response" => Ok(SolveMethod::BestResponse),
        other => Err(Error::InvalidArgument(format!(
            "unknown method `{other}`; expected grid or best_response"
        ))),
    }
}

fn run(command: Command, common: &Common) -> Result<i32, Error> {
    let bytes = std::fs::read(&common.config)?;
    let config: ProblemConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config {
            path: "<config>".into(),
            reason: e.to_string(),
        })?;
    let hash = config_sha256(&bytes);
    let overrides = Overrides {
        at: common.at.as_deref().map(parse_point).transpose()?,
        method: common.method.as_deref().map(parse_method).transpose()?,
        resolution: common.resolution,
        tol: common.tol,
        seed: common.seed,
        max_iters: common.max_iters,
        step: common.step,
    };
    let report = run_command(command, &config, &hash, &overrides)?;
    let mut rendered = serde_json::to_string_pretty(&report)?;
    rendered.push('\n');
    match &common.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let (command, common) = match &cli.command {
        Cmd::Validate(c) => (Command::Validate, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Oracle(c) => (Command::Oracle, c),
        Cmd::Audit(c) => (Command::Audit, c),
        Cmd::Coercivity(c) => (Command::Coercivity, c),
    };
    match run(command, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("qhs: {err}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
    }
}
