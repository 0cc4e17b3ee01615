//! `tangentflow` command-line front end.
//!
//! Exit codes: 0 success, 1 a checked law failed, 2 usage error, 3 numeric
//! error during evaluation or integration.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{validate, Cli};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<tangentflow::Error> for CliError {
    fn from(e: tangentflow::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let name = cli.command.name();
    let flags = cli.command.flags().resolve()?;
    validate(name, &flags)?;
    let outcome = commands::run(name, &flags)?;
    let text = outcome.text + "\n";
    match &flags.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write --out {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush());
        }
    }
    Ok(if outcome.passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
