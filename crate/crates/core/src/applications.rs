//! Three uses of the fixed-form approximations: the CDF of a skew-normal
//! distribution, the expected log-sum of independent Bernoulli variables, and
//! the expected absolute value of a Gaussian.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::sigmoid::{
    fixed_form_expected_log_sigmoid, log_sigmoid, parametric_expected_sigmoid, sigmoid, Gaussian1D, LogSigmoidCoeffs,
    SigmoidShape, LOGISTIC_VARIANCE,
};

/// `π/√3`: rescales a standardized Gaussian to the logistic with equal
/// variance.
const LOGISTIC_MATCH: f64 = 1.813_799_364_234_217_8;

/// Default smoothing width of [`expected_abs`].
pub const DEFAULT_ABS_SMOOTHING: f64 = 1e-3;

/// Skew-normal density `∝ s((x - t)/rho) · N(x | mu, sigma)`; `sigma` is a
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalParams {
    t: f64,
    rho: f64,
    mu: f64,
    sigma: f64,
}

impl SkewNormalParams {
    pub fn new(t: f64, rho: f64, mu: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("t", t), ("mu", mu)] {
            if !v.is_finite() {
                return Err(domain(name, format!("must be finite, got {v}")));
            }
        }
        for (name, v) in [("rho", rho), ("sigma", sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { t, rho, mu, sigma })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Approximate normalizer `K ≈ s((μ - t) / sqrt(ρ² + 3σ/π²))`.
    pub fn normalizer(&self) -> f64 {
        let g = Gaussian1D::new(self.mu, self.sigma).expect("validated");
        let shape = SigmoidShape::new(self.t, self.rho).expect("validated");
        parametric_expected_sigmoid(g, shape)
    }

    /// Mean and variance `(η, ν)` of the Gaussian proportional to
    /// `N(x | t, π²ρ²/3) · N(x | μ, σ)`.
    pub fn product_moments(&self) -> (f64, f64) {
        let logistic_var = LOGISTIC_VARIANCE * self.rho * self.rho;
        let nu = 1.0 / (1.0 / logistic_var + 1.0 / self.sigma);
        (nu * (self.t / logistic_var + self.mu / self.sigma), nu)
    }

    /// Scale factor `ω` of that product.
    pub fn omega(&self, form: OmegaForm) -> f64 {
        let v = LOGISTIC_VARIANCE * self.rho * self.rho + self.sigma;
        match form {
            OmegaForm::GaussianProduct => (-0.5 * (self.t - self.mu).powi(2) / v).exp() / (2.0 * PI * v).sqrt(),
            OmegaForm::Printed => (-0.5 * (self.t + self.mu).powi(2) / v).exp() / (2.0 * PI * v.sqrt()),
        }
    }
}

/// Expression used for `ω`.
///
/// `GaussianProduct` is the normalizer of a product of two Gaussian
/// densities, `N(t | μ, σ + π²ρ²/3)`. `Printed` keeps a `1/(2π)` prefactor and
/// the sum `t + μ` in the exponent; it does not integrate the product
/// correctly and is kept for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaForm {
    #[default]
    GaussianProduct,
    Printed,
}

/// Unnormalized log-density `log s((x - t)/ρ) + log N(x | μ, σ)`.
pub fn skew_normal_log_pdf_unnorm(p: SkewNormalParams, x: f64) -> f64 {
    log_sigmoid((x - p.t) / p.rho) - 0.5 * (2.0 * PI * p.sigma).ln() - 0.5 * (x - p.mu).powi(2) / p.sigma
}

/// Closed-form approximation of the skew-normal CDF at `z`, clamped to
/// `[0, 1]`, with the default [`OmegaForm`].
pub fn skew_normal_cdf(p: SkewNormalParams, z: f64) -> f64 {
    skew_normal_cdf_with(p, z, OmegaForm::default())
}

/// `[s((z-t)/ρ)·s(k(z-μ)/√σ) - ω·s(k(z-η)/√ν)] / K` with `k = π/√3`,
/// clamped to `[0, 1]`.
pub fn skew_normal_cdf_with(p: SkewNormalParams, z: f64, form: OmegaForm) -> f64 {
    let (eta, nu) = p.product_moments();
    let head = sigmoid((z - p.t) / p.rho) * sigmoid(LOGISTIC_MATCH * (z - p.mu) / p.sigma.sqrt());
    let tail = p.omega(form) * sigmoid(LOGISTIC_MATCH * (z - eta) / nu.sqrt());
    ((head - tail) / p.normalizer()).clamp(0.0, 1.0)
}

/// Success probabilities of independent Bernoulli variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliBatch {
    lambdas: Vec<f64>,
}

impl BernoulliBatch {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(domain("lambdas", "need at least one variable"));
        }
        if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(domain("lambdas", format!("each must lie in [0, 1], got {l}")));
        }
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Mean `Σλᵢ` of the sum.
    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Variance `Σλᵢ(1 - λᵢ)` of the sum.
    pub fn variance(&self) -> f64 {
        self.lambdas.iter().map(|l| l * (1.0 - l)).sum()
    }
}

/// `(μ, Σ)` such that the log-normal `eˣ`, `x ~ N(μ, Σ)`, has the mean and
/// variance of the Bernoulli sum: `Σ = ln(1 + V/E²)`, `μ = ln E - Σ/2`.
pub fn bernoulli_logsum_matched_gaussian(b: &BernoulliBatch) -> Result<Gaussian1D> {
    let m = b.mean();
    if m <= 0.0 {
        return Err(domain("lambdas", "the sum has zero mean"));
    }
    let var = (b.variance() / (m * m)).ln_1p();
    Gaussian1D::new(m.ln() - 0.5 * var, var)
}

/// Approximates `E[log(1 + Σbᵢ)]` as `-E[log s(-x)]` under the matched
/// Gaussian, using the fixed-form expected log-sigmoid.
pub fn expected_log_sum_bernoulli(b: &BernoulliBatch, coeffs: LogSigmoidCoeffs) -> Result<f64> {
    let g = bernoulli_logsum_matched_gaussian(b)?;
    let flipped = Gaussian1D::new(-g.mu(), g.var())?;
    Ok(-fixed_form_expected_log_sigmoid(flipped, coeffs))
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(domain("rho", format!("must be finite and > 0, got {rho}")))
    }
}

/// Smooth absolute value `x - 2ρ log s(x/ρ)`, within `2ρ ln 2` above `|x|`.
pub fn soft_abs(x: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(x - 2.0 * rho * log_sigmoid(x / rho))
}

/// Approximates `E|x|` as `E[soft_abs(x, ρ)]`, with the expected log-sigmoid
/// taken in fixed form at `(μ/ρ, Σ/ρ²)`.
///
/// The rescaled variance lies far outside the range the coefficients were
/// fitted on, and the approximation is poor there: at `μ = 0`, `Σ = 1`,
/// `ρ = 10⁻³` it gives about `0.17` for a true `0.80`.
pub fn expected_abs(g: Gaussian1D, rho: f64, coeffs: LogSigmoidCoeffs) -> Result<f64> {
    check_rho(rho)?;
    let scaled = Gaussian1D::new(g.mu() / rho, g.var() / (rho * rho))?;
    Ok(g.mu() - 2.0 * rho * fixed_form_expected_log_sigmoid(scaled, coeffs))
}

/// The soft-abs bias bound `2ρ ln 2`.
pub fn soft_abs_bias(rho: f64) -> f64 {
    2.0 * rho * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_match_constant() {
        assert!((LOGISTIC_MATCH - PI / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn skew_params_validation() {
        assert!(SkewNormalParams::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(SkewNormalParams::new(0.0, 1.0, 0.0, -1.0).is_err());
        assert!(SkewNormalParams::new(f64::NAN, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn skew_lower_limit_and_range() {
        let p = SkewNormalParams::new(0.5, 0.7, 1.0, 2.0).unwrap();
        assert!(skew_normal_cdf(p, 1.0 - 40.0 * 2f64.sqrt()) < 1e-6);
        for z in [-10.0, -1.0, 0.0, 1.0, 3.0, 50.0] {
            let v = skew_normal_cdf(p, z);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn skew_log_pdf_values() {
        let p = SkewNormalParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let half_peak = (0.5 / (2.0 * PI).sqrt()).ln();
        assert!((skew_normal_log_pdf_unnorm(p, 0.0) - half_peak).abs() < 1e-15);
        let far = SkewNormalParams::new(-1e4, 1.0, 0.3, 2.0).unwrap();
        let log_n = -0.5 * (4.0 * PI).ln() - 0.25 * (1.1f64 - 0.3).powi(2);
        assert!((skew_normal_log_pdf_unnorm(far, 1.1) - log_n).abs() < 1e-9);
    }

    #[test]
    fn omega_forms_differ_only_off_centre() {
        let p = SkewNormalParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let v = LOGISTIC_VARIANCE + 1.0;
        assert!((p.omega(OmegaForm::GaussianProduct) - 1.0 / (2.0 * PI * v).sqrt()).abs() < 1e-15);
        assert!((p.omega(OmegaForm::Printed) - 1.0 / (2.0 * PI * v.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_matching() {
        assert!(BernoulliBatch::new(vec![]).is_err());
        assert!(BernoulliBatch::new(vec![0.5, 1.2]).is_err());
        let zero = BernoulliBatch::new(vec![0.0, 0.0]).unwrap();
        assert!(bernoulli_logsum_matched_gaussian(&zero).is_err());

        let det = BernoulliBatch::new(vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let g = bernoulli_logsum_matched_gaussian(&det).unwrap();
        assert_eq!(g.var(), 0.0);
        assert!((g.mu() - 3f64.ln()).abs() < 1e-15);
        let v = expected_log_sum_bernoulli(&det, LogSigmoidCoeffs::FITTED).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-6);

        let one = BernoulliBatch::new(vec![0.5]).unwrap();
        let g = bernoulli_logsum_matched_gaussian(&one).unwrap();
        let mean = (g.mu() + 0.5 * g.var()).exp();
        let var = (g.var().exp() - 1.0) * (2.0 * g.mu() + g.var()).exp();
        assert!((mean - 0.5).abs() < 1e-15 && (var - 0.25).abs() < 1e-15);
    }

    #[test]
    fn soft_abs_values() {
        assert!(soft_abs(1.0, 0.0).is_err());
        assert!((soft_abs(0.0, 0.3).unwrap() - soft_abs_bias(0.3)).abs() < 1e-15);
        assert!((soft_abs(5.0, 1e-3).unwrap() - 5.0).abs() < 1e-6);
        assert!((soft_abs(-5.0, 1e-3).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn expected_abs_collapses_without_variance() {
        for mu in [-3.0, 0.0, 0.4, 7.0] {
            let g = Gaussian1D::new(mu, 0.0).unwrap();
            let v = expected_abs(g, DEFAULT_ABS_SMOOTHING, LogSigmoidCoeffs::FITTED).unwrap();
            assert!((v - mu.abs()).abs() <= soft_abs_bias(DEFAULT_ABS_SMOOTHING) + 1e-9);
        }
        assert!(expected_abs(Gaussian1D::new(0.0, 1.0).unwrap(), -1.0, LogSigmoidCoeffs::FITTED).is_err());
    }

    #[test]
    fn expected_abs_underestimates_at_unit_variance() {
        // measured: the fitted exponents are used far outside their range
        let v = expected_abs(Gaussian1D::new(0.0, 1.0).unwrap(), 1e-3, LogSigmoidCoeffs::FITTED).unwrap();
        assert!(v > 0.1 && v < 0.25, "{v}");
    }
}
