//! Command-line driver for the sorted-weight-sectioning crossbar simulator.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, or input
//! files), 2 runtime error (simulation or report failures). Every nonzero
//! exit prints a diagnostic to stderr.

mod commands;
mod opts;
mod pipeline;

use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "swsim",
    version,
    about = "Bit-sliced compute-in-memory crossbar simulator with sorted weight sectioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Build sorted and baseline mappings and report section statistics
    Map(opts::CommonArgs),
    /// Simulate sorted vs baseline under one ADC profile and write a report
    Simulate(opts::CommonArgs),
    /// Sorted (given profile) vs baseline (fixed max resolution) comparison
    Compare(opts::CommonArgs),
    /// Per-section active-column statistics vs Gaussian model predictions
    Analyze(opts::CommonArgs),
    /// Analytic vs Monte Carlo bit-zero probabilities
    Theory(commands::theory::TheoryArgs),
    /// Grid sweep over sparsity x rows x profile, one CSV row per cell
    Sweep(commands::sweep::SweepArgs),
}

/// Distinguishes "your input is wrong" from "the run failed".
pub enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Validation(e) | CliError::Runtime(e) => e,
        }
    }
}

/// Shorthand for fallible command bodies.
pub type CmdResult = Result<(), CliError>;

pub(crate) trait Phase<T> {
    /// Treat an error as a validation failure (exit 1).
    fn validation(self) -> Result<T, CliError>;
    /// Treat an error as a runtime failure (exit 2).
    fn runtime(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Phase<T> for Result<T, E> {
    fn validation(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Validation(e.into()))
    }

    fn runtime(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.command {
        Command::Map(args) => commands::map::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Compare(args) => commands::compare::run(&args),
        Command::Analyze(args) => commands::analyze::run(&args),
        Command::Theory(args) => commands::theory::run(&args),
        Command::Sweep(args) => commands::sweep::run(&args),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
