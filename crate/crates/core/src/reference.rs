//! Independent reference values: closed forms, exact enumeration and
//! adaptive quadrature. Used as oracles in tests and by the CLI.

use libm::erfc;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::applications::{skew_normal_log_pdf_unnorm, BernoulliBatch, SkewNormalParams};
use crate::error::{domain, Error, Result};
use crate::mc::{MCConfig, MCEstimate};
use crate::quadrature::integrate;
use crate::sigmoid::Gaussian1D;

/// Relative tolerance of every quadrature in this module.
pub const QUAD_REL_TOL: f64 = 1e-10;

const MAX_PANELS: usize = 20_000;

/// Half-width of the integration window, in standard deviations.
const WINDOW: f64 = 12.0;

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `E|x|` for `x ~ N(μ, Σ)`:
/// `√(2Σ/π)·exp(-μ²/2Σ) + μ·(1 - 2Φ(-μ/√Σ))`.
pub fn folded_normal_mean(g: Gaussian1D) -> f64 {
    if g.var() == 0.0 {
        return g.mu().abs();
    }
    let sd = g.std_dev();
    sd * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * g.mu() * g.mu() / g.var()).exp()
        + g.mu() * (1.0 - 2.0 * normal_cdf(-g.mu() / sd))
}

/// Exact `E[log(1 + Σbᵢ)]` by dynamic programming over the distribution of
/// the sum.
pub fn exact_expected_log_sum(b: &BernoulliBatch) -> f64 {
    let mut pmf = vec![1.0];
    for &l in b.lambdas() {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &p) in pmf.iter().enumerate() {
            next[k] += p * (1.0 - l);
            next[k + 1] += p * l;
        }
        pmf = next;
    }
    pmf.iter().enumerate().map(|(k, p)| p * (k as f64).ln_1p()).sum()
}

/// Monte-Carlo `E[log(1 + Σbᵢ)]` over `cfg.n_samples()` replicates.
pub fn mc_expected_log_sum(b: &BernoulliBatch, cfg: MCConfig) -> Result<MCEstimate> {
    let dists = b
        .lambdas()
        .iter()
        .map(|&l| Bernoulli::new(l).map_err(|e| domain("lambdas", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let n = cfg.n_samples();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let count = dists.iter().filter(|d| d.sample(&mut rng)).count();
        let v = (count as f64).ln_1p();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    Ok(MCEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
    })
}

/// `E[f(x)]` for `x ~ N(μ, Σ)` by adaptive quadrature over `μ ± 12√Σ`.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, g: Gaussian1D) -> Result<f64> {
    if g.var() == 0.0 {
        return Ok(f(g.mu()));
    }
    let sd = g.std_dev();
    let density = |x: f64| {
        let u = (x - g.mu()) / sd;
        (-0.5 * u * u).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let lo = g.mu() - WINDOW * sd;
    let hi = g.mu() + WINDOW * sd;
    // split at the origin, where the sigmoid family bends
    let parts: Vec<(f64, f64)> = if lo < 0.0 && 0.0 < hi {
        vec![(lo, 0.0), (0.0, hi)]
    } else {
        vec![(lo, hi)]
    };
    let mut total = 0.0;
    for (a, b) in parts {
        total += integrate(|x| f(x) * density(x), a, b, 1e-300, QUAD_REL_TOL, MAX_PANELS)?.value;
    }
    Ok(total)
}

/// Skew-normal CDF at `z` by quadrature of the unnormalized density, divided
/// by the quadrature normalizer.
pub fn skew_normal_cdf_quadrature(p: SkewNormalParams, z: f64) -> Result<f64> {
    let sd = p.sigma().sqrt();
    let lo = p.mu() - WINDOW * sd;
    let hi = p.mu() + WINDOW * sd;
    // rescale so the integrand peaks near one whatever the normalizer
    let peak = (0..=64)
        .map(|i| skew_normal_log_pdf_unnorm(p, lo + (hi - lo) * i as f64 / 64.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let density = |x: f64| (skew_normal_log_pdf_unnorm(p, x) - peak).exp();
    let mass = |a: f64, b: f64| -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        if a < p.t() && p.t() < b {
            cuts.push(p.t());
        }
        cuts.push(b);
        cuts.windows(2)
            .map(|w| integrate(density, w[0], w[1], 1e-300, QUAD_REL_TOL, MAX_PANELS).map(|q| q.value))
            .sum()
    };
    let total = mass(lo, hi)?;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Estimation("skew-normal normalizer underflowed".into()));
    }
    Ok((mass(lo, z.min(hi))? / total).clamp(0.0, 1.0))
}
