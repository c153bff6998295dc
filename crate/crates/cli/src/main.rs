mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

pub const THREADS_ENV: &str = "CAPGATE_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(capgate_core::Error),
}

impl From<capgate_core::Error> for CliError {
    fn from(e: capgate_core::Error) -> Self {
        CliError::Data(e)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Estimate(a) => commands::estimate(cli, a),
        Command::Decide(a) => commands::decide_cmd(cli, a),
        Command::Simulate(a) => commands::simulate(cli, a),
        Command::Batch(a) => commands::batch(cli, a),
        Command::Synth(a) => commands::synth(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
