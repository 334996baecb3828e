//! Secret key rates of Gaussian-modulated continuous-variable QKD under
//! Gaussian collective attacks, computed from the covariance matrix shared
//! by the two honest parties.
//!
//! All numerical code is generic over [`Real`]. Two instantiations are
//! used in practice:
//!
//! * `f64` for verification suites, simulation and everyday work;
//! * [`Precise`] (double-double) for key rates at large modulation
//!   variance, where `f64` loses the small symplectic eigenvalues.

// `!(x <= tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod keyrate;
pub mod linalg;
pub mod protocol;
pub mod scalar;
pub mod simulation;
pub mod verification;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use scalar::Real;

/// Double-double scalar (~32 significant digits).
pub type Precise = scalar::DoubleDouble;

pub type CovarianceMatrix64 = gaussian::CovarianceMatrix<f64>;
pub type CovarianceMatrixPrecise = gaussian::CovarianceMatrix<Precise>;
