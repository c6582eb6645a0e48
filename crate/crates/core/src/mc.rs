//! Seeded Monte-Carlo estimators used as ground truth for every approximation.
//!
//! Streams are driven by ChaCha8 seeded from a single `u64`, so a given
//! `(seed, n_samples)` pair always reproduces the same estimate bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sigmoid::Gaussian1D;
use crate::softmax::GaussianVec;

/// Sample count used per grid cell.
pub const DEFAULT_GRID_SAMPLES: usize = 1_000_000;
/// Sample count used for single-point reference values.
pub const DEFAULT_POINT_SAMPLES: usize = 10_000_000;

const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCConfig {
    n_samples: usize,
    seed: u64,
}

impl MCConfig {
    /// At least 1000 samples are required.
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return Err(domain(
                "n_samples",
                format!("must be at least {MIN_SAMPLES}, got {n_samples}"),
            ));
        }
        Ok(Self { n_samples, seed })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same sample count with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// A Monte-Carlo mean (or variance) with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Iterator over `n_samples` draws from a scalar Gaussian.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    mu: f64,
    sd: f64,
    remaining: usize,
}

impl Iterator for GaussianStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let z: f64 = self.rng.sample(StandardNormal);
        Some(self.mu + self.sd * z)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for GaussianStream {}

pub fn sample_gaussian_1d(g: Gaussian1D, cfg: MCConfig) -> GaussianStream {
    GaussianStream {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        mu: g.mu(),
        sd: g.std_dev(),
        remaining: cfg.n_samples,
    }
}

/// Draws from a multivariate Gaussian as `μ + B·z`, with `B` from
/// [`GaussianVec::factor`].
#[derive(Debug, Clone)]
pub struct GaussianVecSampler {
    rng: ChaCha8Rng,
    mean: Vec<f64>,
    // row-major factor
    factor: Vec<f64>,
    z: Vec<f64>,
    remaining: usize,
}

impl GaussianVecSampler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Writes the next draw into `out`, or returns `false` once the stream is
    /// exhausted.
    #[inline]
    pub fn fill(&mut self, out: &mut [f64]) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        let k = self.mean.len();
        for z in self.z.iter_mut() {
            *z = self.rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate().take(k) {
            let row = &self.factor[i * k..(i + 1) * k];
            *o = self.mean[i] + row.iter().zip(&self.z).map(|(b, z)| b * z).sum::<f64>();
        }
        true
    }
}

impl Iterator for GaussianVecSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.fill(&mut out).then_some(out)
    }
}

/// Stream of draws from `g`. Fails only if `g`'s covariance cannot be
/// factored into finite values.
pub fn sample_gaussian_vec(g: &GaussianVec, cfg: MCConfig) -> Result<GaussianVecSampler> {
    let b = g.factor();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveSemidefinite("non-finite factor".into()));
    }
    let k = g.dim();
    let factor = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| b[(i, j)])
        .collect();
    Ok(GaussianVecSampler {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        mean: g.mean().iter().copied().collect(),
        factor,
        z: vec![0.0; k],
        remaining: cfg.n_samples,
    })
}

/// Running power sums of `f - shift`, for numerically stable moments.
#[derive(Debug, Clone, Default)]
struct Moments {
    shift: f64,
    n: usize,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::Estimation(format!("mapping returned {v} at sample {}", self.n)));
        }
        if self.n == 0 {
            self.shift = v;
        }
        let d = v - self.shift;
        let d2 = d * d;
        self.n += 1;
        self.s1 += d;
        self.s2 += d2;
        self.s3 += d2 * d;
        self.s4 += d2 * d2;
        Ok(())
    }

    fn raw(&self) -> (f64, f64, f64, f64) {
        let n = self.n as f64;
        (self.s1 / n, self.s2 / n, self.s3 / n, self.s4 / n)
    }

    fn mean(&self) -> MCEstimate {
        let n = self.n as f64;
        let (m1, m2, _, _) = self.raw();
        let var = ((m2 - m1 * m1) * n / (n - 1.0)).max(0.0);
        MCEstimate {
            value: self.shift + m1,
            std_error: (var / n).sqrt(),
            n_samples: self.n,
        }
    }

    /// Unbiased sample variance. The standard error uses the large-sample
    /// formula `sqrt((μ₄ - σ⁴) / n)`.
    fn variance(&self) -> MCEstimate {
        let n = self.n as f64;
        let (m1, m2, m3, m4) = self.raw();
        let central2 = (m2 - m1 * m1).max(0.0);
        let central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        MCEstimate {
            value: central2 * n / (n - 1.0),
            std_error: ((central4 - central2 * central2).max(0.0) / n).sqrt(),
            n_samples: self.n,
        }
    }
}

fn accumulate(values: impl Iterator<Item = f64>) -> Result<Moments> {
    let mut m = Moments::default();
    for v in values {
        m.push(v)?;
    }
    Ok(m)
}

fn accumulate_vec<F>(f: F, g: &GaussianVec, cfg: MCConfig) -> Result<Moments>
where
    F: Fn(&[f64]) -> f64,
{
    let mut sampler = sample_gaussian_vec(g, cfg)?;
    let mut x = vec![0.0; g.dim()];
    let mut m = Moments::default();
    while sampler.fill(&mut x) {
        m.push(f(&x))?;
    }
    Ok(m)
}

/// Sample mean of `f(x)`, `x ~ g`. A non-finite `f` value aborts the
/// estimate with [`Error::Estimation`].
pub fn mc_expect<F>(f: F, g: Gaussian1D, cfg: MCConfig) -> Result<MCEstimate>
where
    F: Fn(f64) -> f64,
{
    Ok(accumulate(sample_gaussian_1d(g, cfg).map(f))?.mean())
}

/// Unbiased sample variance of `f(x)`, `x ~ g`.
pub fn mc_variance<F>(f: F, g: Gaussian1D, cfg: MCConfig) -> Result<MCEstimate>
where
    F: Fn(f64) -> f64,
{
    Ok(accumulate(sample_gaussian_1d(g, cfg).map(f))?.variance())
}

/// Sample mean of `f(x)` for vector-valued `x ~ g`.
pub fn mc_expect_vec<F>(f: F, g: &GaussianVec, cfg: MCConfig) -> Result<MCEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(accumulate_vec(f, g, cfg)?.mean())
}

/// Mixes a base seed with cell coordinates. Cells get unrelated streams and
/// the result does not depend on evaluation order.
pub fn cell_seed(seed: u64, coords: &[usize]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15_u64;
    for &c in coords {
        h = splitmix64(h ^ (c as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    }
    seed ^ h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmoid::sigmoid;
    use crate::softmax::{sim_covariance, softmax_component, SimCovSpec};
    use nalgebra::{dmatrix, dvector, DMatrix, DVector};

    fn g(mu: f64, var: f64) -> Gaussian1D {
        Gaussian1D::new(mu, var).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(MCConfig::new(999, 1).is_err());
        assert_eq!(MCConfig::new(1000, 1).unwrap().with_seed(9).seed(), 9);
    }

    #[test]
    fn stream_clt_and_determinism() {
        let cfg = MCConfig::new(1_000_000, 42).unwrap();
        let n = cfg.n_samples() as f64;
        let mean = sample_gaussian_1d(g(0.0, 1.0), cfg).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
        let a: Vec<f64> = sample_gaussian_1d(g(1.0, 2.0), cfg).take(1000).collect();
        let b: Vec<f64> = sample_gaussian_1d(g(1.0, 2.0), cfg).take(1000).collect();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(sample_gaussian_1d(g(5.0, 0.0), MCConfig::new(5000, 3).unwrap()).all(|x| x == 5.0));
    }

    #[test]
    fn expectations() {
        let cfg = MCConfig::new(200_000, 7).unwrap();
        let e = mc_expect(|x| x, g(2.0, 1.0), cfg).unwrap();
        assert!((e.value - 2.0).abs() < 4.0 * e.std_error);
        assert_eq!(e.n_samples, 200_000);
        let e = mc_expect(sigmoid, g(0.0, 9.0), cfg).unwrap();
        assert!((e.value - 0.5).abs() < 4.0 * e.std_error);
        let v = mc_variance(sigmoid, g(0.4, 0.0), cfg).unwrap();
        assert_eq!((v.value, v.std_error), (0.0, 0.0));
        let v = mc_variance(|x| x, g(1.0, 4.0), cfg).unwrap();
        assert!((v.value - 4.0).abs() < 4.0 * v.std_error);
    }

    #[test]
    fn non_finite_mapping_is_an_error() {
        let cfg = MCConfig::new(1000, 7).unwrap();
        let r = mc_expect(|x| if x > 1.0 { f64::NAN } else { x }, g(0.0, 1.0), cfg);
        assert!(matches!(r, Err(Error::Estimation(_))));
    }

    #[test]
    fn vector_sampler_covariance() {
        let n = 400_000;
        let cfg = MCConfig::new(n, 11).unwrap();
        let tol = 5.0 / (n as f64).sqrt();
        let id = GaussianVec::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let corr = empirical_corr(&id, cfg);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(corr[(i, j)].abs() < tol, "corr {i}{j} = {}", corr[(i, j)]);
        }
        let spec = SimCovSpec::new(1.0, 0.5).unwrap();
        let sim = GaussianVec::new(DVector::zeros(3), sim_covariance(spec)).unwrap();
        let corr = empirical_corr(&sim, cfg);
        assert!((corr[(0, 1)] - spec.correlation()).abs() < tol);
    }

    fn empirical_corr(g: &GaussianVec, cfg: MCConfig) -> DMatrix<f64> {
        let k = g.dim();
        let mut s = DMatrix::<f64>::zeros(k, k);
        let mut m = DVector::<f64>::zeros(k);
        let mut sampler = sample_gaussian_vec(g, cfg).unwrap();
        let mut x = vec![0.0; k];
        while sampler.fill(&mut x) {
            let v = DVector::from_column_slice(&x);
            m += &v;
            s += &v * v.transpose();
        }
        let n = cfg.n_samples() as f64;
        m /= n;
        let cov = s / n - &m * m.transpose();
        DMatrix::from_fn(k, k, |i, j| cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt())
    }

    #[test]
    fn rank_one_samples_stay_on_line() {
        let g = GaussianVec::new(dvector![1.0, -2.0], dmatrix![1.0, 2.0; 2.0, 4.0]).unwrap();
        for x in sample_gaussian_vec(&g, MCConfig::new(2000, 5).unwrap()).unwrap() {
            // x₂ + 2 = 2·(x₁ - 1)
            assert!((x[1] + 2.0 - 2.0 * (x[0] - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn vector_expectation_symmetry() {
        let cfg = MCConfig::new(200_000, 3).unwrap();
        let id = GaussianVec::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let e = mc_expect_vec(|x| softmax_component(x, 0), &id, cfg).unwrap();
        assert!((e.value - 1.0 / 3.0).abs() < 4.0 * e.std_error);
    }

    #[test]
    fn cell_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..50 {
            for j in 0..50 {
                assert!(seen.insert(cell_seed(42, &[i, j])));
            }
        }
        assert_ne!(cell_seed(42, &[1, 2]), cell_seed(42, &[2, 1]));
    }
}
