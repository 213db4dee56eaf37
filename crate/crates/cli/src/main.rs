mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::{ConfigError, RunConfig};
use thiserror::Error;

/// Novelty detection experiments on labeled feature data.
#[derive(Parser)]
#[command(name = "novelty", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV
    Synth { config: PathBuf },
    /// Run class-held-out cross-validation and write reports
    Run { config: PathBuf },
    /// Compare simulated vote counts with Chernoff bounds
    Simulate { config: PathBuf },
    /// Write the θ scatter table and requirement statistics of one fold
    Diagnose { config: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let path = match &cli.command {
        Command::Synth { config }
        | Command::Run { config }
        | Command::Simulate { config }
        | Command::Diagnose { config } => config,
    };
    let cfg = RunConfig::load(path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.unwrap_or(0))
        .build()
        .map_err(anyhow::Error::from)?;
    let result = pool.install(|| match cli.command {
        Command::Synth { .. } => commands::synth(&cfg),
        Command::Run { .. } => commands::run(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Diagnose { .. } => commands::diagnose(&cfg),
    });
    result.map_err(|e| match e.downcast::<CliError>() {
        Ok(inner) => inner,
        Err(other) => CliError::Runtime(other),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NOVELTY_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Runtime(inner) => eprintln!("error: {inner:#}"),
                CliError::Config(_) => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
