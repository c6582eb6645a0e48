//! Scalar sigmoid and log-sigmoid mappings, and closed-form approximations to
//! their expectations under a Gaussian input.
//!
//! Everything here is built on one observation: the sigmoid is the CDF of the
//! standard logistic distribution, whose variance is `π²/3`. Replacing that
//! logistic by a Gaussian of equal variance turns `E[s(x)]` into a Gaussian CDF
//! of a Gaussian, which is again a Gaussian CDF, and matching back to the
//! logistic gives a rescaled sigmoid:
//!
//! ```text
//! E[s(x)] ≈ s(μ / sqrt(1 + a·Σ)),     x ~ N(μ, Σ)
//! ```
//!
//! with `a = 3/π²` from the moment-matching argument, or the slightly larger
//! least-squares value `a ≈ 0.368` (the default, see [`SigmoidCoeff`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// `3/π²`, the variance ratio between a standard Gaussian and a standard
/// logistic distribution.
pub const MOMENT_MATCHED_SCALE: f64 = 3.0 / (PI * PI);

/// Variance of the standard logistic distribution, `π²/3`.
pub const LOGISTIC_VARIANCE: f64 = PI * PI / 3.0;

/// A scalar Gaussian belief `N(mu, var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian1D {
    mu: f64,
    var: f64,
}

impl Gaussian1D {
    /// Rejects non-finite moments and negative variances.
    pub fn new(mu: f64, var: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(domain("mu", format!("must be finite, got {mu}")));
        }
        if !var.is_finite() || var < 0.0 {
            return Err(domain("var", format!("must be finite and >= 0, got {var}")));
        }
        Ok(Self { mu, var })
    }

    /// A point mass at `mu`.
    pub fn degenerate(mu: f64) -> Result<Self> {
        Self::new(mu, 0.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn var(&self) -> f64 {
        self.var
    }

    pub fn std_dev(&self) -> f64 {
        self.var.sqrt()
    }

    /// Moments of `(x - t) / rho` for `x` distributed as `self`.
    pub fn affine_standardize(&self, center: f64, slope: f64) -> Result<Self> {
        Self::new((self.mu - center) / slope, self.var / (slope * slope))
    }
}

/// Inflexion point and slope of the parametric sigmoid
/// `s₀(x) = s((x - center) / slope)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidShape {
    center: f64,
    slope: f64,
}

impl SigmoidShape {
    pub fn new(center: f64, slope: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(domain("center", format!("must be finite, got {center}")));
        }
        if !(slope.is_finite() && slope > 0.0) {
            return Err(domain("slope", format!("must be finite and > 0, got {slope}")));
        }
        Ok(Self { center, slope })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Evaluates `s((x - center) / slope)`.
    pub fn eval(&self, x: f64) -> f64 {
        sigmoid((x - self.center) / self.slope)
    }
}

/// Variance-rescaling coefficient `a` of the fixed-form expected sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidCoeff {
    a: f64,
}

impl SigmoidCoeff {
    /// Least-squares fit against Monte-Carlo estimates over
    /// `μ ∈ [-10, 10]`, `Σ ∈ [2⁻⁴, 2⁸]`.
    pub const FITTED: Self = Self { a: 0.368 };

    /// The value `3/π²` given by the double moment-matching argument. It is a
    /// little overconfident (the expected sigmoid it predicts is too steep).
    pub const MOMENT_MATCHED: Self = Self {
        a: MOMENT_MATCHED_SCALE,
    };

    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(domain("a", format!("must be finite and > 0, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl Default for SigmoidCoeff {
    fn default() -> Self {
        Self::FITTED
    }
}

/// The four constants of the fixed-form expected log-sigmoid
/// `log s((μ + b·Σᶜ) / sqrt(1 + a·Σᵈ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSigmoidCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LogSigmoidCoeffs {
    /// Published fit over `μ ∈ [-10, 10]`, `Σ ∈ [2⁻⁴, 2⁸]`.
    pub const FITTED: Self = Self {
        a: 0.205,
        b: -0.319,
        c: 0.781,
        d: 0.870,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("c", c), ("d", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !b.is_finite() {
            return Err(domain("b", format!("must be finite, got {b}")));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl Default for LogSigmoidCoeffs {
    fn default() -> Self {
        Self::FITTED
    }
}

/// The logistic sigmoid `1 / (1 + e⁻ˣ)`.
///
/// Only ever exponentiates a non-positive number, so it saturates cleanly to
/// `0.0` or `1.0` instead of overflowing.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `s(x)·(1 - s(x))`, evaluated as `s(x)·s(-x)` so that it stays accurate in
/// both tails.
#[inline]
fn sigmoid_slope(x: f64) -> f64 {
    sigmoid(x) * sigmoid(-x)
}

/// First or second derivative of the sigmoid.
///
/// Order 1 is `s(1 - s)` and order 2 is `s(1 - s)(1 - 2s)`. Higher orders are
/// refused: the tempting pattern `s·∏ᵢ(1 - i·s)` is already wrong at order 3
/// (it gives `0` at `x = 0`, where the true third derivative is `-1/8`).
pub fn sigmoid_deriv(x: f64, order: u32) -> Result<f64> {
    match order {
        1 => Ok(sigmoid_slope(x)),
        2 => Ok(sigmoid_slope(x) * (sigmoid(-x) - sigmoid(x))),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// `log s(x) = -log(1 + e⁻ˣ)`, without overflow or cancellation for any
/// finite `x`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Taylor approximation of `E[s(x)]` around `μ`.
///
/// Order 1 ignores the variance. Order 2 adds the curvature term
/// `½ s''(μ) Σ`, which is unbounded in `Σ`: the result can leave `[0, 1]`.
pub fn taylor_expected_sigmoid(g: Gaussian1D, order: u32) -> Result<f64> {
    let s = sigmoid(g.mu);
    match order {
        1 => Ok(s),
        2 => Ok(s * (1.0 + 0.5 * sigmoid(-g.mu) * (sigmoid(-g.mu) - s) * g.var)),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Fixed-form approximation `E[s(x)] ≈ s(μ / sqrt(1 + a·Σ))`.
///
/// Always in `(0, 1)`, sigmoidal and increasing in `μ`, flatter as `Σ` grows,
/// and exact when `Σ = 0`.
pub fn fixed_form_expected_sigmoid(g: Gaussian1D, coeff: SigmoidCoeff) -> f64 {
    sigmoid(g.mu / (1.0 + coeff.a * g.var).sqrt())
}

/// Second-order Taylor approximation `E[log s(x)] ≈ log s(μ) - ½ s'(μ) Σ`.
pub fn taylor_expected_log_sigmoid(g: Gaussian1D) -> f64 {
    log_sigmoid(g.mu) - 0.5 * sigmoid_slope(g.mu) * g.var
}

/// Fixed-form approximation
/// `E[log s(x)] ≈ log s((μ + b·Σᶜ) / sqrt(1 + a·Σᵈ))`.
///
/// The result is always negative, so its exponential (the "effective
/// sigmoid") is a valid probability. `Σᶜ` and `Σᵈ` are taken as `0` at
/// `Σ = 0`.
pub fn fixed_form_expected_log_sigmoid(g: Gaussian1D, coeffs: LogSigmoidCoeffs) -> f64 {
    log_sigmoid(log_sigmoid_argument(g, coeffs))
}

/// Argument of the outer `log s(·)` in [`fixed_form_expected_log_sigmoid`].
pub(crate) fn log_sigmoid_argument(g: Gaussian1D, k: LogSigmoidCoeffs) -> f64 {
    let (pow_c, pow_d) = if g.var == 0.0 {
        (0.0, 0.0)
    } else {
        (g.var.powf(k.c), g.var.powf(k.d))
    };
    (g.mu + k.b * pow_c) / (1.0 + k.a * pow_d).sqrt()
}

/// `E[s₀(x)]` for the parametric sigmoid `s₀(x) = s((x - t)/ρ)`:
/// `s((μ - t) / sqrt(ρ² + (3/π²)·Σ))`.
pub fn parametric_expected_sigmoid(g: Gaussian1D, shape: SigmoidShape) -> f64 {
    let rho = shape.slope;
    sigmoid((g.mu - shape.center) / (rho * rho + MOMENT_MATCHED_SCALE * g.var).sqrt())
}

/// `E[1 / (shift + e⁻ˣ)]`, using `1/(a + e⁻ˣ) = s(x + log a) / a`.
pub fn expected_reciprocal_shifted(g: Gaussian1D, shift: f64) -> Result<f64> {
    if !(shift.is_finite() && shift > 0.0) {
        return Err(domain("shift", format!("must be finite and > 0, got {shift}")));
    }
    let shape = SigmoidShape::new(-shift.ln(), 1.0)?;
    Ok(parametric_expected_sigmoid(g, shape) / shift)
}

/// `1 / sqrt(1 + (3/π²)·Σ)`.
#[inline]
fn moment_matched_shrinkage(var: f64) -> f64 {
    1.0 / (1.0 + MOMENT_MATCHED_SCALE * var).sqrt()
}

/// `E[s'(x)] ≈ s'(μ·J)·J` with `J = 1 / sqrt(1 + (3/π²)·Σ)`.
///
/// This is the form that feeds [`sigmoid_variance`]. It is exact at `Σ = 0`
/// and has the smallest worst-case absolute error over the standard
/// `(μ, Σ)` grid; see [`expected_sigmoid_derivative_gaussian`] for the
/// alternative.
pub fn expected_sigmoid_derivative(g: Gaussian1D) -> f64 {
    let j = moment_matched_shrinkage(g.var);
    sigmoid_slope(g.mu * j) * j
}

/// `E[s'(x)]` with `s'` replaced by the Gaussian density `N(0, π²/3)` before
/// integrating, i.e. the density of `N(μ, Σ + π²/3)` at zero.
///
/// Usually closer in relative terms for moderate `Σ`, but it does not reduce
/// to `s'(μ)` as `Σ → 0` (at `μ = 0` it gives `0.2197` instead of `0.25`).
pub fn expected_sigmoid_derivative_gaussian(g: Gaussian1D) -> f64 {
    let v = g.var + LOGISTIC_VARIANCE;
    (-0.5 * g.mu * g.mu / v).exp() / (2.0 * PI * v).sqrt()
}

/// `Var[s(x)] ≈ s̃(1 - s̃)(1 - J)` with `J = 1 / sqrt(1 + (3/π²)·Σ)` and
/// `s̃ = s(μ·J)`.
///
/// Follows from `Var[s] = E[s](1 - E[s]) - E[s']`. Lies in `[0, 1/4)`, is
/// zero at `Σ = 0`, increases with `Σ`, and tends to `1/4` as `Σ → ∞`.
pub fn sigmoid_variance(g: Gaussian1D) -> f64 {
    let r = (1.0 + MOMENT_MATCHED_SCALE * g.var).sqrt();
    // 1 - 1/r without cancellation for small Σ
    let one_minus_j = MOMENT_MATCHED_SCALE * g.var / (r * (r + 1.0));
    sigmoid_slope(g.mu / r) * one_minus_j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mu: f64, var: f64) -> Gaussian1D {
        Gaussian1D::new(mu, var).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(750.0), 1.0);
        assert_eq!(sigmoid(-750.0), 0.0);
        assert!((sigmoid(2.0) - 0.880_797_077_977_882_4).abs() < 1e-15);
        assert!(sigmoid(f64::MAX).is_finite() && sigmoid(-f64::MAX).is_finite());
    }

    #[test]
    fn derivative_values_and_order_limits() {
        assert_eq!(sigmoid_deriv(0.0, 1).unwrap(), 0.25);
        assert_eq!(sigmoid_deriv(0.0, 2).unwrap(), 0.0);
        assert!((sigmoid_deriv(1.0, 1).unwrap() - 0.196_611_933_241_481_85).abs() < 1e-16);
        assert_eq!(sigmoid_deriv(0.0, 3), Err(Error::UnsupportedOrder(3)));
        assert_eq!(sigmoid_deriv(0.0, 0), Err(Error::UnsupportedOrder(0)));
    }

    #[test]
    fn log_sigmoid_values() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-16);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!((log_sigmoid(3.0) + 0.048_587_351_573_742_06).abs() < 1e-16);
        assert!((log_sigmoid(10.0) + 4.539_889_921_686_465e-5).abs() < 1e-19);
        assert!(log_sigmoid(800.0) == 0.0 || log_sigmoid(800.0) < 0.0);
    }

    #[test]
    fn taylor_sigmoid() {
        assert_eq!(taylor_expected_sigmoid(g(0.0, 123.0), 1).unwrap(), 0.5);
        assert_eq!(taylor_expected_sigmoid(g(0.0, 4.0), 2).unwrap(), 0.5);
        // plug-in value from 40-digit arithmetic
        let v = taylor_expected_sigmoid(g(2.0, 8.0), 2).unwrap();
        assert!((v - 0.560_947_073_753_270_2).abs() < 1e-14);
        // the curvature term is unbounded
        assert!(taylor_expected_sigmoid(g(-2.0, 64.0), 2).unwrap() > 1.0);
        assert!(taylor_expected_sigmoid(g(0.0, 1.0), 3).is_err());
    }

    #[test]
    fn fixed_form_sigmoid_limits() {
        assert_eq!(fixed_form_expected_sigmoid(g(0.0, 100.0), SigmoidCoeff::FITTED), 0.5);
        for a in [0.1, 0.368, 2.0] {
            let c = SigmoidCoeff::new(a).unwrap();
            assert_eq!(fixed_form_expected_sigmoid(g(5.0, 0.0), c), sigmoid(5.0));
        }
        assert!((sigmoid(5.0) - 0.993_307_149_075_715_2).abs() < 1e-15);
        let v = fixed_form_expected_sigmoid(g(1.0, 4.0), SigmoidCoeff::MOMENT_MATCHED);
        assert!((v - 0.661_902_426_031_265_4).abs() < 1e-14);
    }

    #[test]
    fn fixed_form_log_sigmoid_limits() {
        let k = LogSigmoidCoeffs::FITTED;
        assert_eq!(fixed_form_expected_log_sigmoid(g(0.0, 0.0), k), log_sigmoid(0.0));
        assert_eq!(fixed_form_expected_log_sigmoid(g(10.0, 0.0), k), log_sigmoid(10.0));
        assert!(fixed_form_expected_log_sigmoid(g(50.0, 1e-3), k) < 0.0);
    }

    #[test]
    fn taylor_log_sigmoid_plug_in() {
        assert_eq!(taylor_expected_log_sigmoid(g(0.0, 0.0)), log_sigmoid(0.0));
        let v = taylor_expected_log_sigmoid(g(0.0, 4.0));
        assert!((v - (-std::f64::consts::LN_2 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn parametric_and_shifted() {
        let shape = SigmoidShape::new(1.3, 0.7).unwrap();
        assert_eq!(parametric_expected_sigmoid(g(1.3, 9.0), shape), 0.5);
        let shape = SigmoidShape::new(1.0, 2.0).unwrap();
        assert!((parametric_expected_sigmoid(g(3.0, 0.0), shape) - 0.731_058_578_630_004_9).abs() < 1e-15);
        // unit slope and zero center is the moment-matched fixed form
        let unit = SigmoidShape::new(0.0, 1.0).unwrap();
        for (mu, var) in [(0.3, 2.0), (-4.0, 17.0), (9.0, 0.5)] {
            assert_eq!(
                parametric_expected_sigmoid(g(mu, var), unit),
                fixed_form_expected_sigmoid(g(mu, var), SigmoidCoeff::MOMENT_MATCHED)
            );
        }
        assert_eq!(expected_reciprocal_shifted(g(0.0, 0.0), 1.0).unwrap(), 0.5);
        let e = std::f64::consts::E;
        let v = expected_reciprocal_shifted(g(0.0, 0.0), e).unwrap();
        assert!((v - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!(expected_reciprocal_shifted(g(0.0, 1.0), 0.0).is_err());
        assert!(expected_reciprocal_shifted(g(0.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn derivative_expectation_limits() {
        assert_eq!(expected_sigmoid_derivative(g(0.0, 0.0)), 0.25);
        assert!(expected_sigmoid_derivative(g(30.0, 1.0)) < 1e-11);
        assert!(expected_sigmoid_derivative(g(-30.0, 1.0)) < 1e-11);
        // the Gaussian-density variant misses the deterministic limit
        assert!((expected_sigmoid_derivative_gaussian(g(0.0, 0.0)) - 0.25).abs() > 0.03);
    }

    #[test]
    fn variance_limits() {
        assert_eq!(sigmoid_variance(g(3.0, 0.0)), 0.0);
        assert!((sigmoid_variance(g(0.0, 1e12)) - 0.25).abs() < 1e-5);
        assert!(sigmoid_variance(g(0.0, 1e300)) <= 0.25);
    }

    #[test]
    fn zero_variance_reduces_to_deterministic_values() {
        for mu in [-12.0, -1.5, 0.0, 0.25, 7.0] {
            let p = g(mu, 0.0);
            assert_eq!(fixed_form_expected_sigmoid(p, SigmoidCoeff::FITTED), sigmoid(mu));
            assert_eq!(
                fixed_form_expected_log_sigmoid(p, LogSigmoidCoeffs::FITTED),
                log_sigmoid(mu)
            );
            assert_eq!(expected_sigmoid_derivative(p), sigmoid_deriv(mu, 1).unwrap());
            assert_eq!(sigmoid_variance(p), 0.0);
        }
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Gaussian1D::new(0.0, -1e-300).is_err());
        assert!(Gaussian1D::new(f64::NAN, 1.0).is_err());
        assert!(Gaussian1D::new(0.0, f64::INFINITY).is_err());
        assert!(SigmoidShape::new(0.0, 0.0).is_err());
        assert!(SigmoidCoeff::new(-0.1).is_err());
        assert!(LogSigmoidCoeffs::new(0.2, -0.3, 0.0, 0.8).is_err());
        assert!(LogSigmoidCoeffs::new(0.2, -5.0, 0.7, 0.8).is_ok());
    }
}
