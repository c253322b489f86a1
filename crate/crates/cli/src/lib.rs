//! `rbsim` command-line driver: JSON configs in, CSV tables and JSON
//! sidecars out.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

pub use config::{Experiment, RunConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
    /// The invariant suite reported failures.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "cannot write output: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rbsim_core::Error> for CliError {
    fn from(e: rbsim_core::Error) -> Self {
        match e {
            rbsim_core::Error::Validation(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rbsim", version, about = "Randomized-benchmarking decay curves under correlated noise")]
pub struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: `output_path` from the config, else `rbsim-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo and sweeps.
    #[arg(long, env = "RBSIM_WORKERS")]
    pub workers: Option<usize>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo at 20 000 sequences × 100 noise realizations.
    #[arg(long)]
    pub full_scale: bool,
}

/// The configuration as actually run; its digest is stamped on every output.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub experiment: Experiment,
    pub full_scale: bool,
    pub run: RunConfig,
}

impl EffectiveConfig {
    pub fn digest(&self) -> String {
        rbsim_core::analytic::config_digest(self)
    }
}

pub fn resolve(cli: &Cli) -> Result<EffectiveConfig, CliError> {
    let mut run = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(e) = run.experiment {
        if e != cli.experiment {
            return Err(CliError::Config(format!(
                "config is for `{}` but the subcommand is `{}`",
                e.name(),
                cli.experiment.name()
            )));
        }
    }
    run.experiment = Some(cli.experiment);
    if let Some(s) = cli.seed {
        run.seed = Some(s);
    }
    if let Some(out) = &cli.out {
        run.output_path = Some(out.clone());
    }
    Ok(EffectiveConfig { experiment: cli.experiment, full_scale: cli.full_scale, run })
}

/// Runs one command. Returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(cli)?;
    let workers = match cli.workers {
        Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&cfg))
}
