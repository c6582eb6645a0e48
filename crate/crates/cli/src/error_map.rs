use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use sigmoid_moments::grid::{
    oracle_grid, softmax_oracle_grid, ErrorScale, GridAxes, GridSummary, Moment, SoftmaxAxes, REL_ERROR_FLOOR,
};
use sigmoid_moments::mc::{MCConfig, DEFAULT_GRID_SAMPLES};
use sigmoid_moments::*;

use crate::output::{sibling, write_csv, write_json, CliResult, RunManifest, DEFAULT_TIMESTAMP, SCHEMA_VERSION};

/// Header of one-dimensional error-map CSVs.
pub const GRID_HEADER: [&str; 6] = ["mu", "sigma", "approx", "oracle", "oracle_stderr", "rel_error"];

/// Header of softmax error-map CSVs.
pub const SOFTMAX_HEADER: [&str; 8] = [
    "rho",
    "sigma",
    "mu2",
    "mu3",
    "approx",
    "oracle",
    "oracle_stderr",
    "rel_error",
];

/// `(μ, Σ)` grid flags. `Σ` runs over powers of two.
#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct GridFlags {
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 41)]
    pub mu_steps: usize,
    #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
    pub sigma_exp_min: i32,
    #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
    pub sigma_exp_max: i32,
}

impl GridFlags {
    pub fn axes(&self) -> CliResult<GridAxes> {
        Ok(GridAxes::linear_by_powers_of_two(
            self.mu_min,
            self.mu_max,
            self.mu_steps,
            self.sigma_exp_min,
            self.sigma_exp_max,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Fixed-form E[s(x)], a = 0.368.
    Sigmoid,
    /// Fixed-form E[log s(x)], published coefficients.
    LogSigmoid,
    /// Closed-form Var[s(x)].
    Variance,
    /// Fixed-form E[π₁(x)] on the three-class simulation grid.
    Softmax,
    /// Plug-in log s(μ).
    Taylor1,
    /// Second-order Taylor E[log s(x)].
    Taylor2,
    /// Plug-in s(μ).
    SigmoidTaylor1,
    /// Second-order Taylor E[s(x)].
    SigmoidTaylor2,
    /// Plug-in π₁(μ) on the simulation grid.
    SoftmaxTaylor1,
    /// Second-order Taylor E[π₁(x)] on the simulation grid.
    SoftmaxTaylor2,
}

impl Target {
    fn is_softmax(self) -> bool {
        matches!(self, Target::Softmax | Target::SoftmaxTaylor1 | Target::SoftmaxTaylor2)
    }
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
    /// Denser softmax grid (19 × 17 × 21 × 21 instead of 9 × 9 × 11 × 11).
    #[arg(long)]
    pub fine: bool,
    /// CSV output; the JSON summary goes next to it as `<stem>.summary.json`.
    #[arg(short = 'o', long = "output")]
    #[serde(skip)]
    pub output: PathBuf,
    /// Timestamp recorded in the manifest.
    #[arg(long, default_value = DEFAULT_TIMESTAMP)]
    #[serde(skip)]
    pub timestamp: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub target: Target,
    pub error_scale: ErrorScale,
    pub rel_error_floor: f64,
    #[serde(flatten)]
    pub summary: GridSummary,
    pub csv: String,
    pub manifest: RunManifest,
}

/// The (oracle mapping, moment, approximation, error scale) of a scalar target.
type ScalarTarget = (fn(f64) -> f64, Moment, fn(Gaussian1D) -> f64, ErrorScale);

fn scalar_target(target: Target) -> ScalarTarget {
    match target {
        Target::Sigmoid => (
            sigmoid,
            Moment::Mean,
            |g| fixed_form_expected_sigmoid(g, SigmoidCoeff::FITTED),
            ErrorScale::Identity,
        ),
        Target::LogSigmoid => (
            log_sigmoid,
            Moment::Mean,
            |g| fixed_form_expected_log_sigmoid(g, LogSigmoidCoeffs::FITTED),
            ErrorScale::Exp,
        ),
        Target::Variance => (sigmoid, Moment::Variance, sigmoid_variance, ErrorScale::Identity),
        Target::Taylor1 => (log_sigmoid, Moment::Mean, |g| log_sigmoid(g.mu()), ErrorScale::Exp),
        Target::Taylor2 => (log_sigmoid, Moment::Mean, taylor_expected_log_sigmoid, ErrorScale::Exp),
        Target::SigmoidTaylor1 => (sigmoid, Moment::Mean, |g| sigmoid(g.mu()), ErrorScale::Identity),
        Target::SigmoidTaylor2 => (
            sigmoid,
            Moment::Mean,
            |g| taylor_expected_sigmoid(g, 2).expect("order 2 is supported"),
            ErrorScale::Identity,
        ),
        Target::Softmax | Target::SoftmaxTaylor1 | Target::SoftmaxTaylor2 => unreachable!("not a scalar target"),
    }
}

fn softmax_approx(target: Target, g: &GaussianVec) -> Result<f64> {
    match target {
        Target::Softmax => fixed_form_expected_softmax(g, 0, SigmoidCoeff::FITTED),
        Target::SoftmaxTaylor1 => taylor_expected_softmax(g, 0, 1),
        Target::SoftmaxTaylor2 => taylor_expected_softmax(g, 0, 2),
        _ => unreachable!("not a softmax target"),
    }
}

pub fn run(args: Args) -> CliResult {
    let cfg = MCConfig::new(args.n, args.seed)?;
    let (summary, scale) = if args.target.is_softmax() {
        let axes = if args.fine {
            SoftmaxAxes::fine()
        } else {
            SoftmaxAxes::coarse()
        };
        let oracle = softmax_oracle_grid(&axes, cfg)?;
        let grid = oracle.compare(|g| softmax_approx(args.target, g))?;
        write_csv(
            &args.output,
            &SOFTMAX_HEADER,
            grid.cells.iter().map(|c| {
                vec![
                    c.rho,
                    c.sigma,
                    c.mu2,
                    c.mu3,
                    c.approx,
                    c.oracle,
                    c.oracle_stderr,
                    c.rel_error,
                ]
            }),
        )?;
        (grid.summary(), ErrorScale::Identity)
    } else {
        let axes = args.grid.axes()?;
        let (f, moment, approx, scale) = scalar_target(args.target);
        let grid = oracle_grid(f, moment, &axes, cfg)?.compare(approx, scale);
        write_csv(
            &args.output,
            &GRID_HEADER,
            grid.cells()
                .map(|c| vec![c.mu, c.sigma, c.approx, c.oracle, c.oracle_stderr, c.rel_error]),
        )?;
        (grid.summary(), scale)
    };

    let summary_path = sibling(&args.output, "summary.json");
    let doc = Summary {
        schema_version: SCHEMA_VERSION,
        target: args.target,
        error_scale: scale,
        rel_error_floor: REL_ERROR_FLOOR,
        csv: args
            .output
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        manifest: RunManifest::new("error-map", &args, Some(args.seed), &args.timestamp)?,
        summary,
    };
    write_json(&summary_path, &doc)?;
    println!(
        "{}: max_rel_error={} mean_rel_error={} max_prob_error={} -> {}",
        args.output.display(),
        doc.summary.max_rel_error,
        doc.summary.mean_rel_error,
        doc.summary.max_prob_error,
        summary_path.display()
    );
    Ok(())
}
