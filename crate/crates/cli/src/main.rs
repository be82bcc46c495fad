//! `muskat`: run, check, convergence and decay-study front end.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::EXIT_CONFIG;
use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Inhomogeneous Muskat interface simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial data and write diagnostics, snapshots and a manifest.
    Run { config: PathBuf },
    /// Evaluate both decay conditions on the initial data.
    Check { config: PathBuf },
    /// Temporal and spatial self-convergence study.
    Convergence { config: PathBuf },
    /// Run, fit decay rates and compare with the guaranteed rate.
    DecayStudy { config: PathBuf },
}

fn threads(config: &Config) -> Result<Option<usize>, CliError> {
    match std::env::var("MUSKAT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("MUSKAT_THREADS = {v:?} is not a positive integer"))),
        },
        Err(_) => Ok(config.output.threads),
    }
}

type Handler = fn(&Config) -> Result<i32, CliError>;

fn execute(command: &Command) -> Result<i32, CliError> {
    let (path, f): (&PathBuf, Handler) = match command {
        Command::Run { config } => (config, commands::cmd_run),
        Command::Check { config } => (config, commands::cmd_check),
        Command::Convergence { config } => (config, commands::cmd_convergence),
        Command::DecayStudy { config } => (config, commands::cmd_decay_study),
    };
    let config = Config::load(path)?;
    match threads(&config)? {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| f(&config))
        }
        None => f(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
