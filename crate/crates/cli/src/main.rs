//! `missrate` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or a failed check, 2 runtime
//! failure, 64 usage error. `MISSRATE_THREADS` sets the worker pool width.

mod args;
mod commands;
mod inputs;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// A command ran but its result says the input or check is invalid.
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailed {}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn exit_code(err: &anyhow::Error) -> u8 {
    use missrate_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ValidationFailed>() || cause.is::<serde_json::Error>() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io(_) | E::Evaluation(_) | E::Initialization(_) | E::Sampler(_) | E::Imputation(_) => {
                    EXIT_RUNTIME
                }
                _ => EXIT_VALIDATION,
            };
        }
    }
    EXIT_RUNTIME
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MISSRATE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| ValidationFailed(format!("MISSRATE_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::CheckId(a) => commands::check_id::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Report(a) => commands::report::run(a),
        Command::Check(a) => commands::check::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
