use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the numerical engine can report.
///
/// Scalars are carried as `f64` regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square with even dimension ({rows}x{cols})")]
    BadShape { rows: usize, cols: usize },

    #[error("covariance matrix is not symmetric (max |γij − γji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error(
        "covariance matrix violates the uncertainty principle: symplectic eigenvalue {nu} < 1"
    )]
    Unphysical { nu: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode set must not be empty")]
    EmptyModeSet,

    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("mode index {index} appears more than once")]
    DuplicateMode { index: usize },

    #[error("measured and kept mode sets overlap at mode {index}")]
    OverlappingModes { index: usize },

    #[error("matrix is not symplectic (max |SΩSᵀ − Ω| = {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("invalid {name} = {value}: must satisfy {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("measurement outcome covariance is not positive definite (conditional variance ≤ 0)")]
    NonPositiveConditionalVariance,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate sample: {what} has zero variance")]
    DegenerateSample { what: &'static str },

    #[error(
        "estimated covariance matrix is unphysical (symplectic eigenvalue {nu}); \
         rerun with more samples than {n}"
    )]
    UnphysicalEstimate { nu: f64, n: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            constraint,
        }
    }
}
