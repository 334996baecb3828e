//! Gaussian-state calculus on covariance matrices.
//!
//! Conventions used throughout:
//!
//! * shot-noise units, so the vacuum covariance matrix is the identity;
//! * interleaved quadrature ordering `(x1, p1, x2, p2, …)`, so mode `k`
//!   owns rows/columns `2k` and `2k + 1`;
//! * the symplectic form is block diagonal with blocks `[[0, 1], [-1, 0]]`;
//! * entropies are in bits.
//!
//! First moments never enter: only second moments matter for everything
//! computed here.

mod covariance;
mod entropy;
mod measurement;
mod symplectic;

pub use covariance::{
    symplectic_eigenvalues, CovarianceMatrix, PHYSICALITY_TOLERANCE, SYMMETRY_TOLERANCE,
};
pub use entropy::{entropy_function, von_neumann_entropy};
pub use measurement::{
    condition_on_measurement, condition_on_quadratures, MeasurementKind, Quadrature,
};
pub use symplectic::{
    beam_splitter_symplectic, phase_rotation_symplectic, squeezer_symplectic, SymplecticForm,
    SymplecticTransform, SYMPLECTIC_TOLERANCE,
};

use crate::scalar::Real;

/// Two-mode squeezed vacuum (EPR state) with reduced variance `V ≥ 1`.
///
/// Blocks are `[[V·I, c·Z], [c·Z, V·I]]` with `c = √(V² − 1)` and
/// `Z = diag(1, −1)`.
pub fn two_mode_squeezed_cm<R: Real>(variance: R) -> crate::Result<CovarianceMatrix<R>> {
    if !(variance >= R::one()) || !variance.is_finite() {
        return Err(crate::Error::param(
            "V",
            variance.to_f64_lossy(),
            "finite and V ≥ 1",
        ));
    }
    let corr = ((variance - R::one()) * (variance + R::one())).sqrt();
    Ok(CovarianceMatrix::from_blocks_unchecked(
        variance, variance, corr,
    ))
}
