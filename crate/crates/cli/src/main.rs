mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stall(String),
    Io(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Stall(_) => 3,
            Self::Io(_) => 4,
            Self::Verification(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Stall(m) => write!(f, "solver stall: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<admm4dvar::Error> for CliError {
    fn from(e: admm4dvar::Error) -> Self {
        use admm4dvar::Error as E;
        match e {
            E::Config(_) | E::Dimension { .. } => Self::Usage(e.to_string()),
            E::Stall { .. } | E::NonConvergence { .. } | E::SolverFailure(_) | E::NonFinite(_) => {
                Self::Stall(e.to_string())
            }
        }
    }
}

/// 4D-Var twin experiments solved by linearized multi-block ADMM or by
/// shooting baselines.
///
/// Settings come from an optional `key = value` file and `--key value`
/// overrides; `model` is required.
#[derive(Parser, Debug)]
#[command(name = "admm4dvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roll the true state forward and write noisy observations.
    GenerateObs(RunArgs),
    /// Assimilate with admm, gd, cg-fr or cg-pr.
    Solve(RunArgs),
    /// Dot-product and finite-difference checks of tangent and adjoint.
    CheckAdjoint(RunArgs),
    /// Scan the Lorenz shooting objective over a box of initial states.
    Landscape(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args) = match &cli.command {
        Command::GenerateObs(a) => ("generate-obs", a),
        Command::Solve(a) => ("solve", a),
        Command::CheckAdjoint(a) => ("check-adjoint", a),
        Command::Landscape(a) => ("landscape", a),
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let cfg = RunConfig::load(args.config.as_deref(), &args.overrides)?;
    match name {
        "generate-obs" => commands::generate_obs(&cfg),
        "solve" => commands::solve(&cfg),
        "check-adjoint" => commands::check_adjoint(&cfg),
        _ => commands::landscape(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("admm4dvar: {e}");
            ExitCode::from(e.code())
        }
    }
}
