//! Softmax and log-softmax: derivatives, and Gaussian expectations built from
//! pairwise sigmoid contrasts.
//!
//! Component indices are zero-based throughout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sigmoid::{fixed_form_expected_sigmoid, Gaussian1D, SigmoidCoeff};

/// Floor used when the fixed-form softmax drifts out of `(0, 1)` through
/// rounding.
const PROBABILITY_FLOOR: f64 = 1e-15;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_EIGEN_FLOOR: f64 = 1e-10;

/// A `K`-dimensional Gaussian belief `N(mean, cov)` with `K ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianVec {
    /// Checks dimensions, symmetry (relative tolerance `1e-12`) and positive
    /// semidefiniteness (Cholesky, falling back to a minimum-eigenvalue test
    /// at `-1e-10·tr Σ`).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let k = mean.len();
        if k < 2 {
            return Err(domain("mean", format!("dimension must be >= 2, got {k}")));
        }
        if cov.nrows() != k || cov.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: if cov.nrows() != k { cov.nrows() } else { cov.ncols() },
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(domain("cov", "entries must be finite"));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..k {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotPositiveSemidefinite(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        if cov.clone().cholesky().is_none() {
            let min_eig = cov.clone().symmetric_eigenvalues().min();
            let floor = -PSD_EIGEN_FLOOR * cov.trace().abs();
            if min_eig < floor {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "smallest eigenvalue {min_eig:e} is below {floor:e}"
                )));
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let k = mean.len();
        if cov_row_major.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                got: cov_row_major.len(),
            });
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(k, k, cov_row_major),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// A matrix `B` with `B·Bᵀ = Σ`.
    ///
    /// This is the lower Cholesky factor when `Σ` is numerically positive
    /// definite. Otherwise it is `Q·diag(sqrt(max(λ, 0)))` from the symmetric
    /// eigendecomposition, which keeps rank-deficient covariances exact.
    pub fn factor(&self) -> DMatrix<f64> {
        if let Some(chol) = self.cov.clone().cholesky() {
            return chol.l();
        }
        let eig = self.cov.clone().symmetric_eigen();
        let mut b = eig.eigenvectors;
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let root = lambda.max(0.0).sqrt();
            b.column_mut(j).scale_mut(root);
        }
        b
    }
}

/// A contrast (weight) vector `c`, turning `x` into the scalar `c·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    weights: DVector<f64>,
}

impl Contrast {
    pub fn new(weights: DVector<f64>) -> Self {
        Self { weights }
    }

    /// `e_k - e_other`, the contrast of `x_k - x_other`.
    pub fn pairwise(k: usize, other: usize, dim: usize) -> Result<Self> {
        check_index(k, dim)?;
        check_index(other, dim)?;
        if k == other {
            return Err(domain("other", "pairwise contrast needs two distinct indices"));
        }
        let mut w = DVector::zeros(dim);
        w[k] = 1.0;
        w[other] = -1.0;
        Ok(Self { weights: w })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }
}

/// Covariance design for the three-dimensional softmax simulations:
/// `Σ = σ·A·Aᵀ` with `A = I + ρ·(J - I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCovSpec {
    sigma: f64,
    rho: f64,
}

impl SimCovSpec {
    /// `sigma > 0` and `-1/2 < rho < 1`; `A` is singular at both ends of the
    /// `rho` range.
    pub fn new(sigma: f64, rho: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(domain("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        if !(rho > -0.5 && rho < 1.0) {
            return Err(domain("rho", format!("must lie in (-1/2, 1), got {rho}")));
        }
        Ok(Self { sigma, rho })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Correlation between any two entries: `(2ρ + ρ²) / (1 + 2ρ²)`.
    pub fn correlation(&self) -> f64 {
        let r = self.rho;
        (2.0 * r + r * r) / (1.0 + 2.0 * r * r)
    }
}

/// `σ·A·Aᵀ` for the 3×3 simulation design. Diagonal `σ(1 + 2ρ²)`,
/// off-diagonal `σ(2ρ + ρ²)`.
pub fn sim_covariance(spec: SimCovSpec) -> DMatrix<f64> {
    let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { spec.rho });
    (&a * a.transpose()) * spec.sigma
}

fn check_index(k: usize, dim: usize) -> Result<()> {
    if k < dim {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: k, dim })
    }
}

/// `exp(xₖ) / Σⱼ exp(xⱼ)`, with the maximum subtracted first.
pub fn softmax(x: &DVector<f64>) -> DVector<f64> {
    let max = x.max();
    let mut p = x.map(|v| (v - max).exp());
    let total = p.sum();
    p /= total;
    p
}

/// `log πₖ(x)` for all `k`.
pub fn log_softmax(x: &DVector<f64>) -> DVector<f64> {
    let max = x.max();
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.map(|v| v - lse)
}

/// One softmax component on a plain slice, as `1 / Σⱼ exp(xⱼ - xₖ)`. Used in
/// Monte-Carlo inner loops; an overflowing term correctly gives `0`.
#[inline]
pub fn softmax_component(x: &[f64], k: usize) -> f64 {
    let xk = x[k];
    1.0 / x.iter().map(|v| (v - xk).exp()).sum::<f64>()
}

/// `∂ log πₖ / ∂x = eₖ - π(x)`.
pub fn log_softmax_gradient(x: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
    check_index(k, x.len())?;
    let mut g = -softmax(x);
    g[k] += 1.0;
    Ok(g)
}

/// `∂² log πₖ / ∂x² = π·πᵀ - Diag(π)`, which is the same for every `k`.
pub fn log_softmax_hessian(x: &DVector<f64>) -> DMatrix<f64> {
    let p = softmax(x);
    &p * p.transpose() - DMatrix::from_diagonal(&p)
}

/// `∂πₖ / ∂x = πₖ·(eₖ - π)`.
pub fn softmax_gradient(x: &DVector<f64>, k: usize) -> Result<DVector<f64>> {
    check_index(k, x.len())?;
    let p = softmax(x);
    let mut g = -&p;
    g[k] += 1.0;
    Ok(g * p[k])
}

/// `∂²πₖ / ∂x² = πₖ·(π·πᵀ - Diag(π) + (eₖ - π)(eₖ - π)ᵀ)`.
pub fn softmax_hessian(x: &DVector<f64>, k: usize) -> Result<DMatrix<f64>> {
    check_index(k, x.len())?;
    let p = softmax(x);
    Ok(softmax_hessian_at(&p, k))
}

fn softmax_hessian_at(p: &DVector<f64>, k: usize) -> DMatrix<f64> {
    let mut e = -p;
    e[k] += 1.0;
    let inner = p * p.transpose() - DMatrix::from_diagonal(p) + &e * e.transpose();
    inner * p[k]
}

/// `tr(A·B)` without forming the product.
fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `E[log πₖ(x)] ≈ log πₖ(μ) + ½·tr[(π(μ)π(μ)ᵀ - Diag(π(μ)))·Σ]`.
pub fn taylor_expected_log_softmax(g: &GaussianVec, k: usize) -> Result<f64> {
    check_index(k, g.dim())?;
    let log_p = log_softmax(&g.mean)[k];
    Ok(log_p + 0.5 * trace_of_product(&log_softmax_hessian(&g.mean), &g.cov))
}

/// Taylor approximation of `E[πₖ(x)]`: order 1 is `πₖ(μ)`, order 2 adds
/// `½·tr[∂²πₖ(μ)·Σ]`. Order 2 is unbounded and routinely leaves `[0, 1]`
/// for large covariances.
pub fn taylor_expected_softmax(g: &GaussianVec, k: usize, order: u32) -> Result<f64> {
    check_index(k, g.dim())?;
    let p = softmax(&g.mean);
    match order {
        1 => Ok(p[k]),
        2 => Ok(p[k] + 0.5 * trace_of_product(&softmax_hessian_at(&p, k), &g.cov)),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Moments `(c·μ, c·Σ·cᵀ)` of the scalar `c·x`.
pub fn contrast_moments(g: &GaussianVec, c: &Contrast) -> Result<Gaussian1D> {
    if c.weights.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: c.weights.len(),
        });
    }
    let mean = c.weights.dot(&g.mean);
    let var = (g.cov.transpose() * &c.weights).dot(&c.weights);
    // PSD covariance; clip rounding below zero
    Gaussian1D::new(mean, var.max(0.0))
}

/// Fixed-form approximation of `E[πₖ(x)]`.
///
/// Writes `πₖ = 1 / (2 - K + Σ_{j≠k} 1/s(xₖ - xⱼ))`, approximates each
/// `E[s(xₖ - xⱼ)]` with [`fixed_form_expected_sigmoid`] on the contrast's
/// moments, and substitutes. This is exact in form only for `K = 2`, where it
/// returns the contrast's expected sigmoid directly. The approximations for
/// different `k` are not renormalized and need not sum to one.
pub fn fixed_form_expected_softmax(g: &GaussianVec, k: usize, coeff: SigmoidCoeff) -> Result<f64> {
    let dim = g.dim();
    check_index(k, dim)?;
    let expected_contrast = |other: usize| -> Result<f64> {
        let c = Contrast::pairwise(k, other, dim)?;
        Ok(fixed_form_expected_sigmoid(contrast_moments(g, &c)?, coeff))
    };
    if dim == 2 {
        return expected_contrast(1 - k);
    }
    let mut denom = 2.0 - dim as f64;
    for other in (0..dim).filter(|&j| j != k) {
        denom += 1.0 / expected_contrast(other)?;
    }
    Ok((1.0 / denom).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
}
