//! Closed-form approximations to Gaussian expectations of sigmoid and softmax
//! mappings, with a Monte-Carlo harness to measure their error.
//!
//! ```
//! use sigmoid_moments::{fixed_form_expected_sigmoid, Gaussian1D, SigmoidCoeff};
//!
//! let g = Gaussian1D::new(1.0, 4.0)?;
//! let p = fixed_form_expected_sigmoid(g, SigmoidCoeff::FITTED);
//! assert!((p - 0.6539).abs() < 1e-3);
//! # Ok::<(), sigmoid_moments::Error>(())
//! ```
//!
//! Modules:
//!
//! * [`sigmoid`]: scalar sigmoid, log-sigmoid, derivatives and their
//!   expectations.
//! * [`softmax`]: softmax, log-softmax, gradients, Hessians and their
//!   expectations under a multivariate Gaussian.
//! * [`mc`] and [`grid`]: seeded Monte-Carlo estimates and error maps.
//! * [`calibration`]: refits of the fixed-form coefficients.
//! * [`applications`]: skew-normal CDF, Bernoulli log-sum, expected `|x|`.
//! * [`reference`]: exact and quadrature oracles.

pub mod applications;
pub mod calibration;
mod error;
pub mod grid;
pub mod mc;
pub mod optimize;
pub mod quadrature;
pub mod reference;
pub mod sigmoid;
pub mod softmax;

pub use error::{Error, Result};

/// Version of this library, recorded in CLI run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use sigmoid::{
    expected_reciprocal_shifted, expected_sigmoid_derivative, expected_sigmoid_derivative_gaussian,
    fixed_form_expected_log_sigmoid, fixed_form_expected_sigmoid, log_sigmoid, parametric_expected_sigmoid, sigmoid,
    sigmoid_deriv, sigmoid_variance, taylor_expected_log_sigmoid, taylor_expected_sigmoid, Gaussian1D,
    LogSigmoidCoeffs, SigmoidCoeff, SigmoidShape,
};
pub use softmax::{
    contrast_moments, fixed_form_expected_softmax, log_softmax, sim_covariance, softmax, taylor_expected_log_softmax,
    taylor_expected_softmax, Contrast, GaussianVec, SimCovSpec,
};
