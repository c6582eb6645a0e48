//! Error maps: approximation vs. Monte-Carlo oracle over a parameter grid.
//!
//! Every cell draws from its own stream seeded by [`cell_seed`], so grids are
//! bit-identical whatever the evaluation order or thread count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mc::{cell_seed, mc_expect, mc_expect_vec, mc_variance, MCConfig, MCEstimate};
use crate::sigmoid::Gaussian1D;
use crate::softmax::{sim_covariance, softmax_component, GaussianVec, SimCovSpec};

/// Denominator floor of [`relative_error`].
pub const REL_ERROR_FLOOR: f64 = 1e-12;

/// `|approx - oracle| / max(|oracle|, 1e-12)`.
pub fn relative_error(approx: f64, oracle: f64) -> f64 {
    (approx - oracle).abs() / oracle.abs().max(REL_ERROR_FLOOR)
}

/// Which moment of `f(x)` the oracle estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Moment {
    Mean,
    Variance,
}

/// How values are mapped onto the probability scale before taking the
/// absolute error reported as `prob_error`.
///
/// Expected log-sigmoids are compared as effective sigmoids `exp(·)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorScale {
    Identity,
    Exp,
}

impl ErrorScale {
    /// Absolute error on the probability scale.
    pub fn error(self, approx: f64, oracle: f64) -> f64 {
        match self {
            ErrorScale::Identity => (approx - oracle).abs(),
            ErrorScale::Exp => (approx.exp() - oracle.exp()).abs(),
        }
    }
}

/// Mean axis (`μ`) by variance axis (`Σ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GridAxes {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || sigma.is_empty() {
            return Err(domain("axes", "both axes must be non-empty"));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(domain("mu_axis", "values must be finite"));
        }
        if sigma.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(domain("sigma_axis", "values must be finite and > 0"));
        }
        Ok(Self { mu, sigma })
    }

    /// `steps` evenly spaced means in `[mu_min, mu_max]` against variances
    /// `2^exp_min, ..., 2^exp_max`.
    pub fn linear_by_powers_of_two(mu_min: f64, mu_max: f64, steps: usize, exp_min: i32, exp_max: i32) -> Result<Self> {
        if steps == 0 || exp_min > exp_max || mu_min > mu_max {
            return Err(domain("axes", "empty or reversed range"));
        }
        Self::new(
            linspace(mu_min, mu_max, steps),
            (exp_min..=exp_max).map(|e| 2f64.powi(e)).collect(),
        )
    }

    /// 41 means on `[-10, 10]` by 13 variances `2⁻⁴ ... 2⁸`.
    pub fn standard() -> Self {
        Self::linear_by_powers_of_two(-10.0, 10.0, 41, -4, 8).expect("valid standard axes")
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.mu.len(), self.sigma.len())
    }

    pub fn gaussian(&self, i: usize, j: usize) -> Gaussian1D {
        Gaussian1D::new(self.mu[i], self.sigma[j]).expect("axes are validated")
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Monte-Carlo oracle values on a [`GridAxes`] grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    axes: GridAxes,
    moment: Moment,
    value: DMatrix<f64>,
    std_error: DMatrix<f64>,
}

/// Estimates `E[f(x)]` or `Var[f(x)]` in every cell, with cell `(i, j)`
/// seeded by `cell_seed(cfg.seed(), &[i, j])`.
pub fn oracle_grid<F>(f: F, moment: Moment, axes: &GridAxes, cfg: MCConfig) -> Result<OracleGrid>
where
    F: Fn(f64) -> f64 + Sync,
{
    let (rows, cols) = axes.shape();
    let estimates = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols, idx % cols);
            let cell_cfg = cfg.with_seed(cell_seed(cfg.seed(), &[i, j]));
            let g = axes.gaussian(i, j);
            let est = match moment {
                Moment::Mean => mc_expect(&f, g, cell_cfg),
                Moment::Variance => mc_variance(&f, g, cell_cfg),
            };
            est.map_err(|e| Error::Cell {
                coords: vec![i, j],
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<MCEstimate>>>()?;
    Ok(OracleGrid {
        axes: axes.clone(),
        moment,
        value: DMatrix::from_row_iterator(rows, cols, estimates.iter().map(|e| e.value)),
        std_error: DMatrix::from_row_iterator(rows, cols, estimates.iter().map(|e| e.std_error)),
    })
}

impl OracleGrid {
    /// A noise-free "oracle" computed from a closed form, for calibration
    /// self-consistency checks.
    pub fn from_fn<F>(axes: &GridAxes, moment: Moment, f: F) -> Self
    where
        F: Fn(Gaussian1D) -> f64,
    {
        let (rows, cols) = axes.shape();
        Self {
            axes: axes.clone(),
            moment,
            value: DMatrix::from_fn(rows, cols, |i, j| f(axes.gaussian(i, j))),
            std_error: DMatrix::zeros(rows, cols),
        }
    }

    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    pub fn moment(&self) -> Moment {
        self.moment
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }

    pub fn std_error(&self) -> &DMatrix<f64> {
        &self.std_error
    }

    /// Evaluates `approx` in every cell and tabulates its errors.
    pub fn compare<A>(&self, approx: A, scale: ErrorScale) -> ErrorGrid
    where
        A: Fn(Gaussian1D) -> f64,
    {
        let (rows, cols) = self.axes.shape();
        let approx = DMatrix::from_fn(rows, cols, |i, j| approx(self.axes.gaussian(i, j)));
        let rel_error = approx.zip_map(&self.value, relative_error);
        let prob_error = approx.zip_map(&self.value, |a, o| scale.error(a, o));
        ErrorGrid {
            mu_axis: self.axes.mu.clone(),
            sigma_axis: self.axes.sigma.clone(),
            approx,
            oracle: self.value.clone(),
            oracle_stderr: self.std_error.clone(),
            rel_error,
            prob_error,
        }
    }
}

/// Approximation, oracle and error tables, all `|mu_axis| × |sigma_axis|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGrid {
    pub mu_axis: Vec<f64>,
    pub sigma_axis: Vec<f64>,
    pub approx: DMatrix<f64>,
    pub oracle: DMatrix<f64>,
    pub oracle_stderr: DMatrix<f64>,
    /// `|approx - oracle| / max(|oracle|, 1e-12)`.
    pub rel_error: DMatrix<f64>,
    /// Absolute error on the probability scale (see [`ErrorScale`]).
    pub prob_error: DMatrix<f64>,
}

/// One row of an [`ErrorGrid`] in row-major (`μ`-major) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub i: usize,
    pub j: usize,
    pub mu: f64,
    pub sigma: f64,
    pub approx: f64,
    pub oracle: f64,
    pub oracle_stderr: f64,
    pub rel_error: f64,
    pub prob_error: f64,
}

impl ErrorGrid {
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        let cols = self.sigma_axis.len();
        (0..self.mu_axis.len() * cols).map(move |idx| {
            let (i, j) = (idx / cols, idx % cols);
            GridCell {
                i,
                j,
                mu: self.mu_axis[i],
                sigma: self.sigma_axis[j],
                approx: self.approx[(i, j)],
                oracle: self.oracle[(i, j)],
                oracle_stderr: self.oracle_stderr[(i, j)],
                rel_error: self.rel_error[(i, j)],
                prob_error: self.prob_error[(i, j)],
            }
        })
    }

    pub fn summary(&self) -> GridSummary {
        summarize(self.cells().map(|c| SummaryInput {
            index: vec![c.i, c.j],
            coords: vec![c.mu, c.sigma],
            rel_error: c.rel_error,
            prob_error: c.prob_error,
        }))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.rel_error.max()
    }

    pub fn max_prob_error(&self) -> f64 {
        self.prob_error.max()
    }
}

/// Approximation vs. Monte-Carlo mean of `oracle_f` on every cell.
pub fn build_error_grid<A, F>(approx: A, oracle_f: F, axes: &GridAxes, cfg: MCConfig) -> Result<ErrorGrid>
where
    A: Fn(Gaussian1D) -> f64,
    F: Fn(f64) -> f64 + Sync,
{
    Ok(oracle_grid(oracle_f, Moment::Mean, axes, cfg)?.compare(approx, ErrorScale::Identity))
}

/// A cell location in a summary: grid indices and the matching axis values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRef {
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n_cells: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub argmax: CellRef,
    pub max_prob_error: f64,
    pub mean_prob_error: f64,
    pub argmax_prob: CellRef,
}

#[derive(Debug, Clone)]
pub struct SummaryInput {
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
    pub rel_error: f64,
    pub prob_error: f64,
}

/// Folds cells (in the order given) into a [`GridSummary`]. Ties keep the
/// first maximum.
pub fn summarize(cells: impl IntoIterator<Item = SummaryInput>) -> GridSummary {
    let empty = CellRef {
        index: vec![],
        coords: vec![],
    };
    let mut s = GridSummary {
        n_cells: 0,
        max_rel_error: f64::NEG_INFINITY,
        mean_rel_error: 0.0,
        argmax: empty.clone(),
        max_prob_error: f64::NEG_INFINITY,
        mean_prob_error: 0.0,
        argmax_prob: empty,
    };
    let (mut rel_sum, mut prob_sum) = (0.0, 0.0);
    for c in cells {
        s.n_cells += 1;
        rel_sum += c.rel_error;
        prob_sum += c.prob_error;
        let cell = CellRef {
            index: c.index,
            coords: c.coords,
        };
        if c.rel_error > s.max_rel_error {
            s.max_rel_error = c.rel_error;
            s.argmax = cell.clone();
        }
        if c.prob_error > s.max_prob_error {
            s.max_prob_error = c.prob_error;
            s.argmax_prob = cell;
        }
    }
    if s.n_cells > 0 {
        s.mean_rel_error = rel_sum / s.n_cells as f64;
        s.mean_prob_error = prob_sum / s.n_cells as f64;
    }
    s
}

/// Axes of the three-dimensional softmax simulation: `ρ` and `σ` of
/// [`SimCovSpec`], and the means of `x₂` and `x₃` (`μ₁ = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxAxes {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mu2: Vec<f64>,
    pub mu3: Vec<f64>,
}

impl SoftmaxAxes {
    /// 9 `ρ` values evenly inside `(-1/2, 1)`, 9 `σ = 100·2⁻⁸ ... 100`,
    /// 11 means each on `[-5, 5]`.
    pub fn coarse() -> Self {
        Self {
            rho: (1..=9).map(|i| -0.5 + 1.5 * i as f64 / 10.0).collect(),
            sigma: (0..9).map(|i| 100.0 * 2f64.powi(i - 8)).collect(),
            mu2: linspace(-5.0, 5.0, 11),
            mu3: linspace(-5.0, 5.0, 11),
        }
    }

    /// 19 × 17 × 21 × 21 over the same ranges.
    pub fn fine() -> Self {
        Self {
            rho: (1..=19).map(|i| -0.5 + 1.5 * i as f64 / 20.0).collect(),
            sigma: (0..17).map(|i| 100.0 * 2f64.powf((i - 16) as f64 / 2.0)).collect(),
            mu2: linspace(-5.0, 5.0, 21),
            mu3: linspace(-5.0, 5.0, 21),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in [&self.rho, &self.sigma, &self.mu2, &self.mu3] {
            if axis.is_empty() {
                return Err(domain("softmax axes", "axes must be non-empty"));
            }
        }
        for (&s, &r) in self.sigma.iter().zip(self.rho.iter().cycle()) {
            SimCovSpec::new(s, r)?;
        }
        for &r in &self.rho {
            SimCovSpec::new(1.0, r)?;
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.rho.len(), self.sigma.len(), self.mu2.len(), self.mu3.len()]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major `(ρ, σ, μ₂, μ₃)` index of flat cell `idx`.
    pub fn unflatten(&self, idx: usize) -> [usize; 4] {
        let [_, ns, n2, n3] = self.shape();
        [idx / (ns * n2 * n3), (idx / (n2 * n3)) % ns, (idx / n3) % n2, idx % n3]
    }

    pub fn gaussian(&self, index: [usize; 4]) -> Result<GaussianVec> {
        let [r, s, a, b] = index;
        let spec = SimCovSpec::new(self.sigma[s], self.rho[r])?;
        GaussianVec::new(
            DVector::from_vec(vec![0.0, self.mu2[a], self.mu3[b]]),
            sim_covariance(spec),
        )
    }
}

/// Monte-Carlo `E[π₁(x)]` over [`SoftmaxAxes`].
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxOracleGrid {
    axes: SoftmaxAxes,
    estimates: Vec<MCEstimate>,
}

/// Estimates `E[π₁(x)]` (component 0) in every cell; cell `[r, s, a, b]` is
/// seeded with `cell_seed(cfg.seed(), &[r, s, a, b])`.
pub fn softmax_oracle_grid(axes: &SoftmaxAxes, cfg: MCConfig) -> Result<SoftmaxOracleGrid> {
    axes.validate()?;
    let estimates = (0..axes.len())
        .into_par_iter()
        .map(|idx| {
            let index = axes.unflatten(idx);
            let cell_cfg = cfg.with_seed(cell_seed(cfg.seed(), &index));
            axes.gaussian(index)
                .and_then(|g| mc_expect_vec(|x| softmax_component(x, 0), &g, cell_cfg))
                .map_err(|e| Error::Cell {
                    coords: index.to_vec(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SoftmaxOracleGrid {
        axes: axes.clone(),
        estimates,
    })
}

/// One cell of a [`SoftmaxErrorGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftmaxCell {
    pub index: [usize; 4],
    pub rho: f64,
    pub sigma: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub approx: f64,
    pub oracle: f64,
    pub oracle_stderr: f64,
    pub rel_error: f64,
    pub prob_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxErrorGrid {
    pub axes: SoftmaxAxes,
    pub cells: Vec<SoftmaxCell>,
}

impl SoftmaxOracleGrid {
    pub fn axes(&self) -> &SoftmaxAxes {
        &self.axes
    }

    pub fn estimates(&self) -> &[MCEstimate] {
        &self.estimates
    }

    /// Evaluates `approx` (an approximation of `E[π₁(x)]`) on every cell.
    pub fn compare<A>(&self, approx: A) -> Result<SoftmaxErrorGrid>
    where
        A: Fn(&GaussianVec) -> Result<f64>,
    {
        let cells = self
            .estimates
            .iter()
            .enumerate()
            .map(|(idx, est)| {
                let index = self.axes.unflatten(idx);
                let [r, s, a, b] = index;
                let value = approx(&self.axes.gaussian(index)?)?;
                Ok(SoftmaxCell {
                    index,
                    rho: self.axes.rho[r],
                    sigma: self.axes.sigma[s],
                    mu2: self.axes.mu2[a],
                    mu3: self.axes.mu3[b],
                    approx: value,
                    oracle: est.value,
                    oracle_stderr: est.std_error,
                    rel_error: relative_error(value, est.value),
                    prob_error: (value - est.value).abs(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SoftmaxErrorGrid {
            axes: self.axes.clone(),
            cells,
        })
    }
}

impl SoftmaxErrorGrid {
    pub fn summary(&self) -> GridSummary {
        summarize(self.cells.iter().map(|c| SummaryInput {
            index: c.index.to_vec(),
            coords: vec![c.rho, c.sigma, c.mu2, c.mu3],
            rel_error: c.rel_error,
            prob_error: c.prob_error,
        }))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.cells.iter().map(|c| c.rel_error).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_prob_error(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.prob_error)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmoid::{fixed_form_expected_sigmoid, sigmoid, SigmoidCoeff};

    #[test]
    fn standard_axes() {
        let axes = GridAxes::standard();
        assert_eq!(axes.shape(), (41, 13));
        assert_eq!(axes.mu()[0], -10.0);
        assert_eq!(axes.mu()[20], 0.0);
        assert_eq!(axes.mu()[40], 10.0);
        assert_eq!(axes.sigma()[0], 0.0625);
        assert_eq!(axes.sigma()[12], 256.0);
        assert!(GridAxes::new(vec![], vec![1.0]).is_err());
        assert!(GridAxes::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.5, 1.0), 0.5);
        assert_eq!(relative_error(1e-12, 0.0), 1.0);
    }

    #[test]
    fn self_comparison_is_within_noise() {
        let axes = GridAxes::linear_by_powers_of_two(-3.0, 3.0, 5, -2, 2).unwrap();
        let cfg = MCConfig::new(20_000, 1).unwrap();
        let oracle = oracle_grid(sigmoid, Moment::Mean, &axes, cfg).unwrap();
        // approximation := the oracle itself, re-estimated from the same stream
        let grid = oracle.compare(
            |g| {
                let (i, j) = (
                    axes.mu().iter().position(|&m| m == g.mu()).unwrap(),
                    axes.sigma().iter().position(|&s| s == g.var()).unwrap(),
                );
                let c = cfg.with_seed(cell_seed(cfg.seed(), &[i, j]));
                mc_expect(sigmoid, g, c).unwrap().value
            },
            ErrorScale::Identity,
        );
        for c in grid.cells() {
            assert!(c.rel_error <= 4.0 * c.oracle_stderr / c.oracle.abs());
        }
    }

    #[test]
    fn grids_are_deterministic_and_cell_local() {
        let cfg = MCConfig::new(5_000, 99).unwrap();
        let axes = GridAxes::linear_by_powers_of_two(-2.0, 2.0, 3, 0, 2).unwrap();
        let a = oracle_grid(sigmoid, Moment::Mean, &axes, cfg).unwrap();
        let b = oracle_grid(sigmoid, Moment::Mean, &axes, cfg).unwrap();
        assert_eq!(a, b);
        // a sub-grid reuses the same per-cell streams
        let sub = GridAxes::new(axes.mu().to_vec(), axes.sigma()[..2].to_vec()).unwrap();
        let c = oracle_grid(sigmoid, Moment::Mean, &sub, cfg).unwrap();
        assert_eq!(c.value().column(1), a.value().column(1));
    }

    #[test]
    fn cell_failures_carry_coordinates() {
        let axes = GridAxes::new(vec![-1.0, 50.0], vec![1.0]).unwrap();
        let cfg = MCConfig::new(1_000, 0).unwrap();
        let err = oracle_grid(|x| if x > 10.0 { f64::NAN } else { x }, Moment::Mean, &axes, cfg).unwrap_err();
        match err {
            Error::Cell { coords, .. } => assert_eq!(coords, vec![1, 0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn summary_matches_tables() {
        let axes = GridAxes::linear_by_powers_of_two(-4.0, 4.0, 9, -2, 4).unwrap();
        let oracle = OracleGrid::from_fn(&axes, Moment::Mean, |g| {
            fixed_form_expected_sigmoid(g, SigmoidCoeff::MOMENT_MATCHED)
        });
        let grid = oracle.compare(
            |g| fixed_form_expected_sigmoid(g, SigmoidCoeff::FITTED),
            ErrorScale::Identity,
        );
        let s = grid.summary();
        assert_eq!(s.n_cells, 9 * 7);
        assert_eq!(s.max_rel_error, grid.max_rel_error());
        assert_eq!(s.max_prob_error, grid.max_prob_error());
        let [i, j] = [s.argmax.index[0], s.argmax.index[1]];
        assert_eq!(grid.rel_error[(i, j)], s.max_rel_error);
        assert_eq!(s.argmax.coords, vec![axes.mu()[i], axes.sigma()[j]]);
    }

    #[test]
    fn softmax_axes_layout() {
        let axes = SoftmaxAxes::coarse();
        assert_eq!(axes.shape(), [9, 9, 11, 11]);
        assert_eq!(axes.len(), 9801);
        axes.validate().unwrap();
        SoftmaxAxes::fine().validate().unwrap();
        assert!((axes.rho[0] + 0.35).abs() < 1e-15 && (axes.rho[8] - 0.85).abs() < 1e-15);
        assert_eq!(axes.sigma[8], 100.0);
        for idx in [0, 1, 120, 9800] {
            let [r, s, a, b] = axes.unflatten(idx);
            assert_eq!(((r * 9 + s) * 11 + a) * 11 + b, idx);
        }
    }
}
