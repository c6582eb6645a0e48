use std::path::PathBuf;

use clap::Subcommand;
use serde::Serialize;
use sigmoid_moments::applications::{
    bernoulli_logsum_matched_gaussian, expected_abs, expected_log_sum_bernoulli, skew_normal_cdf_with, BernoulliBatch,
    OmegaForm, SkewNormalParams, DEFAULT_ABS_SMOOTHING,
};
use sigmoid_moments::reference::{exact_expected_log_sum, folded_normal_mean, skew_normal_cdf_quadrature};
use sigmoid_moments::{Gaussian1D, LogSigmoidCoeffs};

use crate::output::{
    sibling, to_json, write_csv, write_json, CliResult, RunManifest, DEFAULT_TIMESTAMP, SCHEMA_VERSION,
};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form skew-normal CDF at z, plus a z-scan CSV.
    SkewCdf(SkewArgs),
    /// Expected log(1 + Σbᵢ) for independent Bernoulli variables.
    BernoulliLogsum(BernoulliArgs),
    /// Expected |x| for a Gaussian x.
    ExpectedAbs(AbsArgs),
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct Common {
    /// JSON output (also printed to standard output).
    #[arg(short = 'o', long = "output")]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_TIMESTAMP)]
    #[serde(skip)]
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Omega {
    GaussianProduct,
    Printed,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct SkewArgs {
    /// Sigmoid centre.
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Sigmoid slope.
    #[arg(long)]
    pub rho: f64,
    /// Gaussian mean.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    /// Gaussian variance.
    #[arg(long)]
    pub var: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[arg(long, value_enum, default_value = "gaussian-product")]
    pub omega: Omega,
    /// Points of the z-scan over μ ± 6√var.
    #[arg(long, default_value_t = 200)]
    pub scan_points: usize,
    /// z-scan CSV (default: `<output stem>.scan.csv` when -o is given).
    #[arg(long)]
    #[serde(skip)]
    pub scan_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct BernoulliArgs {
    /// Comma-separated success probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct AbsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long)]
    pub var: f64,
    /// Smoothing width of the soft absolute value.
    #[arg(long, default_value_t = DEFAULT_ABS_SMOOTHING)]
    pub rho: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct Report<T> {
    schema_version: u32,
    app: &'static str,
    #[serde(flatten)]
    result: T,
    manifest: RunManifest,
}

#[derive(Debug, Serialize)]
struct SkewResult {
    value: f64,
    quadrature_reference: f64,
    normalizer: f64,
    omega: f64,
    eta: f64,
    nu: f64,
    scan_csv: Option<String>,
}

#[derive(Debug, Serialize)]
struct BernoulliResult {
    value: f64,
    matched_mu: f64,
    matched_var: f64,
    exact_reference: f64,
}

#[derive(Debug, Serialize)]
struct AbsResult {
    value: f64,
    folded_normal_reference: f64,
}

fn emit<T: Serialize>(common: &Common, report: &Report<T>) -> CliResult {
    if let Some(path) = &common.output {
        write_json(path, report)?;
    }
    print!("{}", to_json(report)?);
    Ok(())
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::SkewCdf(args) => skew(args),
        Command::BernoulliLogsum(args) => bernoulli(args),
        Command::ExpectedAbs(args) => abs(args),
    }
}

fn skew(args: SkewArgs) -> CliResult {
    let p = SkewNormalParams::new(args.t, args.rho, args.mu, args.var)?;
    let form = match args.omega {
        Omega::GaussianProduct => OmegaForm::GaussianProduct,
        Omega::Printed => OmegaForm::Printed,
    };
    let scan_path = args
        .scan_out
        .clone()
        .or_else(|| args.common.output.as_ref().map(|o| sibling(o, "scan.csv")));
    if let Some(path) = &scan_path {
        let sd = args.var.sqrt();
        let n = args.scan_points.max(2);
        write_csv(
            path,
            &["z", "cdf"],
            (0..n).map(|i| {
                let z = args.mu - 6.0 * sd + 12.0 * sd * i as f64 / (n - 1) as f64;
                vec![z, skew_normal_cdf_with(p, z, form)]
            }),
        )?;
    }
    let (eta, nu) = p.product_moments();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        app: "skew-cdf",
        result: SkewResult {
            value: skew_normal_cdf_with(p, args.z, form),
            quadrature_reference: skew_normal_cdf_quadrature(p, args.z)?,
            normalizer: p.normalizer(),
            omega: p.omega(form),
            eta,
            nu,
            scan_csv: scan_path.map(|p| p.display().to_string()),
        },
        manifest: RunManifest::new("app skew-cdf", &args, None, &args.common.timestamp)?,
    };
    emit(&args.common, &report)
}

fn bernoulli(args: BernoulliArgs) -> CliResult {
    let batch = BernoulliBatch::new(args.lambdas.clone())?;
    let g = bernoulli_logsum_matched_gaussian(&batch)?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        app: "bernoulli-logsum",
        result: BernoulliResult {
            value: expected_log_sum_bernoulli(&batch, LogSigmoidCoeffs::FITTED)?,
            matched_mu: g.mu(),
            matched_var: g.var(),
            exact_reference: exact_expected_log_sum(&batch),
        },
        manifest: RunManifest::new("app bernoulli-logsum", &args, None, &args.common.timestamp)?,
    };
    emit(&args.common, &report)
}

fn abs(args: AbsArgs) -> CliResult {
    let g = Gaussian1D::new(args.mu, args.var)?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        app: "expected-abs",
        result: AbsResult {
            value: expected_abs(g, args.rho, LogSigmoidCoeffs::FITTED)?,
            folded_normal_reference: folded_normal_mean(g),
        },
        manifest: RunManifest::new("app expected-abs", &args, None, &args.common.timestamp)?,
    };
    emit(&args.common, &report)
}
