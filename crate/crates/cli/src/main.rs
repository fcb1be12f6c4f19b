//! `cyldisc`: command-line harness for the exact experiments in
//! `cyldisc-core`.
//!
//! Every JSON document written carries the resolved configuration it was
//! produced under, and reruns with the same configuration are
//! byte-identical. Exit status: 0 success, 1 invalid input, 2 budget
//! exceeded, 3 internal invariant violation.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use cyldisc::ErrorKind;

use args::Cli;

pub const THREADS_ENV: &str = "CYLDISC_THREADS";

/// An error carrying the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Internal,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Budget => 2,
            ErrorKind::Internal => 3,
        }
    }
}

impl From<cyldisc::Error> for CliError {
    fn from(e: cyldisc::Error) -> Self {
        CliError {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
