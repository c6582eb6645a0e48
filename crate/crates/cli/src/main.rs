//! `sigmoid-moments`: error maps, calibration runs and one-shot applications.

mod app;
mod calibrate;
mod error_map;
mod output;
#[cfg(test)]
mod tests;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  file could not be written
  2  invalid flags or parameters
  3  oracle failure (a Monte-Carlo cell produced a non-finite value)
  4  calibration did not converge";

#[derive(Parser)]
#[command(name = "sigmoid-moments", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate an approximation against a Monte-Carlo oracle over a grid.
    #[command(after_help = EXIT_CODES)]
    ErrorMap(error_map::Args),
    /// Refit the fixed-form coefficients against Monte-Carlo data.
    #[command(after_help = EXIT_CODES)]
    Calibrate(calibrate::Args),
    /// Evaluate one of the applications at given parameters.
    #[command(subcommand)]
    App(app::Command),
}

fn run(cli: Cli) -> output::CliResult {
    match cli.command {
        Command::ErrorMap(args) => error_map::run(args),
        Command::Calibrate(args) => calibrate::run(args),
        Command::App(cmd) => app::run(cmd),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
