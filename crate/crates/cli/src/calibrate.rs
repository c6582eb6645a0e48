use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use sigmoid_moments::calibration::{
    fit_log_sigmoid_coeffs, fit_sigmoid_coeff, log_sigmoid_objective, sigmoid_objective, FitResult,
};
use sigmoid_moments::grid::{oracle_grid, ErrorScale, Moment, OracleGrid};
use sigmoid_moments::mc::{MCConfig, DEFAULT_GRID_SAMPLES};
use sigmoid_moments::*;

use crate::error_map::GridFlags;
use crate::output::{to_json, write_json, CliError, CliResult, RunManifest, DEFAULT_TIMESTAMP, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// The coefficient `a` of the fixed-form expected sigmoid.
    Sigmoid,
    /// The four coefficients of the fixed-form expected log-sigmoid.
    LogSigmoid,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct Args {
    #[arg(value_enum)]
    pub target: Target,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridFlags,
    /// Monte-Carlo samples per cell.
    #[arg(long, default_value_t = DEFAULT_GRID_SAMPLES)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fit to noise-free values of the fixed form itself instead of Monte-Carlo data.
    #[arg(long)]
    pub synthetic: bool,
    /// Coefficients generating the synthetic data: `a` or `a,b,c,d`
    /// (default: the published values).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, requires = "synthetic")]
    pub truth: Option<Vec<f64>>,
    /// JSON output (standard output if omitted).
    #[arg(short = 'o', long = "output")]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_TIMESTAMP)]
    #[serde(skip)]
    pub timestamp: String,
}

#[derive(Debug, Serialize)]
struct Reference<C> {
    coeffs: C,
    objective_value: f64,
}

#[derive(Debug, Serialize)]
struct FitError {
    max_rel_error: f64,
    max_prob_error: f64,
}

#[derive(Debug, Serialize)]
struct Report<C> {
    schema_version: u32,
    target: Target,
    fit: FitResult<C>,
    published: Reference<C>,
    fit_error: FitError,
    manifest: RunManifest,
}

fn sigmoid_truth(truth: &Option<Vec<f64>>) -> CliResult<SigmoidCoeff> {
    match truth.as_deref() {
        None => Ok(SigmoidCoeff::FITTED),
        Some([a]) => Ok(SigmoidCoeff::new(*a)?),
        Some(v) => Err(CliError::Usage(format!(
            "--truth needs 1 value for sigmoid, got {}",
            v.len()
        ))),
    }
}

fn log_sigmoid_truth(truth: &Option<Vec<f64>>) -> CliResult<LogSigmoidCoeffs> {
    match truth.as_deref() {
        None => Ok(LogSigmoidCoeffs::FITTED),
        Some(&[a, b, c, d]) => Ok(LogSigmoidCoeffs::new(a, b, c, d)?),
        Some(v) => Err(CliError::Usage(format!(
            "--truth needs 4 values for log-sigmoid, got {}",
            v.len()
        ))),
    }
}

fn emit<C: Serialize>(args: &Args, report: Report<C>) -> CliResult {
    let converged = report.fit.converged;
    match &args.output {
        Some(path) => write_json(path, &report)?,
        None => print!("{}", to_json(&report)?),
    }
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "stopped after {} iterations",
            report.fit.n_iterations
        )))
    }
}

pub fn run(args: Args) -> CliResult {
    let axes = args.grid.axes()?;
    let cfg = MCConfig::new(args.n, args.seed)?;
    let manifest = RunManifest::new("calibrate", &args, Some(args.seed), &args.timestamp)?;
    match args.target {
        Target::Sigmoid => {
            let oracle = if args.synthetic {
                let truth = sigmoid_truth(&args.truth)?;
                OracleGrid::from_fn(&axes, Moment::Mean, |g| fixed_form_expected_sigmoid(g, truth))
            } else {
                oracle_grid(sigmoid, Moment::Mean, &axes, cfg)?
            };
            let fit = fit_sigmoid_coeff(&oracle)?;
            let grid = oracle.compare(|g| fixed_form_expected_sigmoid(g, fit.coeffs), ErrorScale::Identity);
            let report = Report {
                schema_version: SCHEMA_VERSION,
                target: args.target,
                published: Reference {
                    coeffs: SigmoidCoeff::FITTED,
                    objective_value: sigmoid_objective(&oracle, SigmoidCoeff::FITTED),
                },
                fit_error: FitError {
                    max_rel_error: grid.max_rel_error(),
                    max_prob_error: grid.max_prob_error(),
                },
                fit,
                manifest,
            };
            emit(&args, report)
        }
        Target::LogSigmoid => {
            let oracle = if args.synthetic {
                let truth = log_sigmoid_truth(&args.truth)?;
                OracleGrid::from_fn(&axes, Moment::Mean, |g| fixed_form_expected_log_sigmoid(g, truth))
            } else {
                oracle_grid(log_sigmoid, Moment::Mean, &axes, cfg)?
            };
            let fit = fit_log_sigmoid_coeffs(&oracle)?;
            let grid = oracle.compare(|g| fixed_form_expected_log_sigmoid(g, fit.coeffs), ErrorScale::Exp);
            let report = Report {
                schema_version: SCHEMA_VERSION,
                target: args.target,
                published: Reference {
                    coeffs: LogSigmoidCoeffs::FITTED,
                    objective_value: log_sigmoid_objective(&oracle, LogSigmoidCoeffs::FITTED),
                },
                fit_error: FitError {
                    max_rel_error: grid.max_rel_error(),
                    max_prob_error: grid.max_prob_error(),
                },
                fit,
                manifest,
            };
            emit(&args, report)
        }
    }
}
