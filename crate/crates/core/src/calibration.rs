//! Least-squares refits of the fixed-form coefficients against oracle grids.
//!
//! * `a` of [`fixed_form_expected_sigmoid`] is fitted on the expected-sigmoid
//!   scale by golden-section search over `ln a`.
//! * `(a, b, c, d)` of [`fixed_form_expected_log_sigmoid`] are fitted on the
//!   effective-sigmoid scale, comparing `exp(E[log s])` values, by
//!   multi-start Nelder–Mead over `(ln a, b, ln c, ln d)`.
//!
//! The second objective is the one under which the published log-sigmoid
//! constants are reproduced; fitting raw log values instead pulls the
//! coefficients towards the far left tail, where `E[log s]` is large and
//! negative.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{ErrorScale, Moment, OracleGrid};
use crate::optimize::{golden_section, nelder_mead};
use crate::sigmoid::{fixed_form_expected_log_sigmoid, fixed_form_expected_sigmoid, LogSigmoidCoeffs, SigmoidCoeff};

/// Iteration budget of both searches.
pub const MAX_ITERATIONS: usize = 2000;

/// Simplex diameter (in the reparameterized space) below which a fit counts
/// as converged.
pub const SIMPLEX_TOLERANCE: f64 = 1e-8;

/// Width of the final `ln a` bracket of the one-dimensional search.
pub const BRACKET_TOLERANCE: f64 = 1e-10;

/// Search bracket for `a`.
pub const SIGMOID_BRACKET: (f64, f64) = (1e-3, 10.0);

/// Starting points of the log-sigmoid fit. The first is the published fit.
pub const LOG_SIGMOID_STARTS: [LogSigmoidCoeffs; 6] = [
    LogSigmoidCoeffs::FITTED,
    LogSigmoidCoeffs {
        a: 0.304,
        b: 0.0,
        c: 1.0,
        d: 1.0,
    },
    LogSigmoidCoeffs {
        a: 0.1,
        b: -0.1,
        c: 0.9,
        d: 0.8,
    },
    LogSigmoidCoeffs {
        a: 0.5,
        b: -1.0,
        c: 0.6,
        d: 0.6,
    },
    LogSigmoidCoeffs {
        a: 0.3,
        b: -0.5,
        c: 0.7,
        d: 0.9,
    },
    LogSigmoidCoeffs {
        a: 0.15,
        b: -0.2,
        c: 1.2,
        d: 1.1,
    },
];

/// Initial simplex edge in the reparameterized space.
const SIMPLEX_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<C> {
    pub coeffs: C,
    /// Sum of squared residuals over the grid at `coeffs`.
    pub objective_value: f64,
    pub n_iterations: usize,
    pub converged: bool,
}

fn check_mean_grid(grid: &OracleGrid) -> Result<()> {
    if grid.moment() != Moment::Mean {
        return Err(domain("grid", "calibration needs an oracle of the mean"));
    }
    if grid.value().iter().any(|v| !v.is_finite()) {
        return Err(domain("grid", "oracle contains non-finite cells"));
    }
    Ok(())
}

/// `Σ (fixed_form(μ, Σ; a) - oracle)²` over the grid.
pub fn sigmoid_objective(grid: &OracleGrid, coeff: SigmoidCoeff) -> f64 {
    sum_sq(grid, |g| fixed_form_expected_sigmoid(g, coeff), ErrorScale::Identity)
}

/// `Σ (exp(fixed_form(μ, Σ; a, b, c, d)) - exp(oracle))²` over the grid.
pub fn log_sigmoid_objective(grid: &OracleGrid, coeffs: LogSigmoidCoeffs) -> f64 {
    sum_sq(grid, |g| fixed_form_expected_log_sigmoid(g, coeffs), ErrorScale::Exp)
}

fn sum_sq<A: Fn(crate::Gaussian1D) -> f64>(grid: &OracleGrid, approx: A, scale: ErrorScale) -> f64 {
    grid.compare(approx, scale).prob_error.iter().map(|e| e * e).sum()
}

/// Fits `a` to an oracle of `E[s(x)]`.
pub fn fit_sigmoid_coeff(grid: &OracleGrid) -> Result<FitResult<SigmoidCoeff>> {
    check_mean_grid(grid)?;
    let objective = |ln_a: f64| sigmoid_objective(grid, SigmoidCoeff::new(ln_a.exp()).expect("a > 0"));
    let m = golden_section(
        objective,
        SIGMOID_BRACKET.0.ln(),
        SIGMOID_BRACKET.1.ln(),
        BRACKET_TOLERANCE,
        MAX_ITERATIONS,
    );
    Ok(FitResult {
        coeffs: SigmoidCoeff::new(m.x[0].exp())?,
        objective_value: m.value,
        n_iterations: m.n_iterations,
        converged: m.converged,
    })
}

fn to_params(k: LogSigmoidCoeffs) -> [f64; 4] {
    [k.a.ln(), k.b, k.c.ln(), k.d.ln()]
}

fn from_params(p: &[f64]) -> Option<LogSigmoidCoeffs> {
    LogSigmoidCoeffs::new(p[0].exp(), p[1], p[2].exp(), p[3].exp()).ok()
}

/// Fits `(a, b, c, d)` to an oracle of `E[log s(x)]`, from every start in
/// `starts`, and returns the lowest-objective converged fit (or the
/// lowest-objective fit, flagged unconverged, if none converged).
pub fn fit_log_sigmoid_coeffs_from(
    grid: &OracleGrid,
    starts: &[LogSigmoidCoeffs],
) -> Result<FitResult<LogSigmoidCoeffs>> {
    check_mean_grid(grid)?;
    if starts.is_empty() {
        return Err(domain("starts", "need at least one start"));
    }
    let objective = |p: &[f64]| match from_params(p) {
        Some(k) => log_sigmoid_objective(grid, k),
        None => f64::INFINITY,
    };
    let fits: Vec<FitResult<LogSigmoidCoeffs>> = starts
        .iter()
        .filter_map(|&start| {
            let m = nelder_mead(
                objective,
                &to_params(start),
                SIMPLEX_STEP,
                SIMPLEX_TOLERANCE,
                MAX_ITERATIONS,
            );
            Some(FitResult {
                coeffs: from_params(&m.x)?,
                objective_value: m.value,
                n_iterations: m.n_iterations,
                converged: m.converged && m.value.is_finite(),
            })
        })
        .collect();
    let best = |only_converged: bool| {
        fits.iter()
            .filter(|f| f.converged || !only_converged)
            .min_by(|x, y| x.objective_value.total_cmp(&y.objective_value))
            .cloned()
    };
    best(true)
        .or_else(|| best(false))
        .ok_or_else(|| domain("fit", "every start left the parameter domain"))
}

/// [`fit_log_sigmoid_coeffs_from`] with [`LOG_SIGMOID_STARTS`].
pub fn fit_log_sigmoid_coeffs(grid: &OracleGrid) -> Result<FitResult<LogSigmoidCoeffs>> {
    fit_log_sigmoid_coeffs_from(grid, &LOG_SIGMOID_STARTS)
}
