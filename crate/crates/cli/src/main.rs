//! `sfde` command-line driver.
//!
//! Exit codes: 0 success, 2 config or input error, 3 numeric failure,
//! 4 degenerate Monte Carlo experiment.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfde_core::estimate::Estimator;
use sfde_core::SfdeError;

#[derive(Debug, Parser)]
#[command(
    name = "sfde",
    version,
    about = "Simulate and estimate small-noise stochastic functional delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write it as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the simulation seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate θ from a path CSV
    Estimate {
        /// Path file written by `sfde simulate`
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "closed_form")]
        estimator: Estimator,
        /// Start the optimizer at theta_true
        #[arg(long)]
        warm_start: bool,
    },
    /// Run the Monte Carlo experiment described by the config
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        estimator: Option<Estimator>,
        #[arg(long)]
        warm_start: bool,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::input(message)
    }
}

impl From<SfdeError> for CliError {
    fn from(e: SfdeError) -> Self {
        let code = match e {
            SfdeError::Domain(_) | SfdeError::Format { .. } | SfdeError::Io(_) => 2,
            SfdeError::ExperimentDegenerate { .. } => 4,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn init_logging(verbosity: &str) -> Result<(), CliError> {
    let level: log::LevelFilter = verbosity.parse().map_err(|_| {
        CliError::input(format!(
            "unknown verbosity `{verbosity}` (off, error, warn, info, debug, trace)"
        ))
    })?;
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, seed } => {
            let loaded = config::load(&common.config)?;
            init_logging(&loaded.config.verbosity)?;
            let out = commands::output_dir(common.out, &loaded)?;
            commands::simulate(&loaded, &out, seed)
        }
        Command::Estimate {
            path,
            common,
            estimator,
            warm_start,
        } => {
            let loaded = config::load(&common.config)?;
            init_logging(&loaded.config.verbosity)?;
            let out = commands::output_dir(common.out, &loaded)?;
            commands::estimate_path(&loaded, &path, &out, estimator, warm_start)
        }
        Command::Montecarlo {
            common,
            workers,
            estimator,
            warm_start,
            seed,
        } => {
            let loaded = config::load(&common.config)?;
            init_logging(&loaded.config.verbosity)?;
            let out = commands::output_dir(common.out, &loaded)?;
            commands::montecarlo(&loaded, &out, seed, estimator, warm_start, workers)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
