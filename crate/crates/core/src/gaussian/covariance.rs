use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::symplectic::{SymplecticForm, SymplecticTransform};

/// Accepted `max |γij − γji|`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symplectic eigenvalues down to `1 − PHYSICALITY_TOLERANCE` are accepted
/// as physical. Finite-sample estimates can land marginally below 1; they
/// are not repaired, anything further below is rejected.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

/// Quadrature covariance matrix of an `N`-mode zero-mean Gaussian state.
///
/// Construction through [`CovarianceMatrix::new`] checks symmetry, positive
/// definiteness and the uncertainty principle. Operations that provably
/// preserve physicality (partial trace, direct sums, symplectic congruence,
/// measurement conditioning) skip the re-check.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix<R> {
    n_modes: usize,
    matrix: Matrix<R>,
}

impl<R: Real> CovarianceMatrix<R> {
    pub fn new(matrix: Matrix<R>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 || !matrix.rows().is_multiple_of(2) {
            return Err(Error::BadShape {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let asym = matrix.asymmetry().to_f64_lossy();
        if !(asym <= SYMMETRY_TOLERANCE) {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        let half = R::lit(0.5);
        let sym = Matrix::from_fn(matrix.rows(), matrix.cols(), |i, j| {
            (matrix[(i, j)] + matrix[(j, i)]) * half
        });
        let cm = Self::from_matrix_unchecked(sym);
        cm.symplectic_eigenvalues()?;
        Ok(cm)
    }

    pub fn from_f64(n_modes: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != 4 * n_modes * n_modes {
            return Err(Error::DimensionMismatch {
                expected: 4 * n_modes * n_modes,
                found: row_major.len(),
            });
        }
        Self::new(Matrix::from_f64(2 * n_modes, 2 * n_modes, row_major))
    }

    pub(crate) fn from_matrix_unchecked(matrix: Matrix<R>) -> Self {
        debug_assert!(matrix.is_square() && matrix.rows().is_multiple_of(2));
        Self {
            n_modes: matrix.rows() / 2,
            matrix,
        }
    }

    /// Two-mode matrix in standard form `[[a·I, c·Z], [c·Z, b·I]]`,
    /// `Z = diag(1, −1)`.
    pub(crate) fn from_blocks_unchecked(a: R, b: R, c: R) -> Self {
        let z = R::zero();
        let mut m = Matrix::zeros(4, 4);
        let entries = [[a, z, c, z], [z, a, z, -c], [c, z, b, z], [z, -c, z, b]];
        for (i, row) in entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Self::from_matrix_unchecked(m)
    }

    /// Checked standard-form two-mode matrix.
    pub fn standard_form(a: R, b: R, c: R) -> Result<Self> {
        let cm = Self::from_blocks_unchecked(a, b, c);
        cm.symplectic_eigenvalues()?;
        Ok(cm)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::identity(2 * n_modes))
    }

    /// Single-mode thermal state `diag(v, v)`.
    pub fn thermal(variance: R) -> Result<Self> {
        if !(variance >= R::one()) {
            return Err(Error::param(
                "thermal variance",
                variance.to_f64_lossy(),
                "≥ 1",
            ));
        }
        Ok(Self::from_matrix_unchecked(Matrix::diagonal(&[
            variance, variance,
        ])))
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<R> {
        self.matrix
    }

    pub fn cast<S: Real>(&self) -> CovarianceMatrix<S> {
        CovarianceMatrix {
            n_modes: self.n_modes,
            matrix: self.matrix.cast(),
        }
    }

    /// Symplectic spectrum `ν₁ ≥ … ≥ ν_N`: the moduli of the eigenvalues of
    /// `iΩγ`, each pair collapsed to one value.
    ///
    /// With `γ = L·Lᵀ` (Cholesky), `LᵀΩL` is antisymmetric and similar to
    /// `Ωγ`, so the squared moduli are the eigenvalues of the symmetric
    /// matrix `(LᵀΩL)ᵀ(LᵀΩL)`, each appearing twice.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<R>> {
        let nus = if self.n_modes == 1 {
            let m = &self.matrix;
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            if !(m[(0, 0)] > R::zero()) || !(det > R::zero()) {
                return Err(Error::NotPositiveDefinite);
            }
            vec![det.sqrt()]
        } else {
            let l = self.matrix.cholesky().ok_or(Error::NotPositiveDefinite)?;
            let omega = SymplecticForm::new(self.n_modes).into_matrix();
            let k = l.transpose().matmul(&omega).matmul(&l);
            let sq = k.transpose().matmul(&k).symmetric_eigenvalues();
            let half = R::lit(0.5);
            sq.chunks(2)
                .map(|pair| ((pair[0] + pair[1]) * half).max(R::zero()).sqrt())
                .collect()
        };
        let floor = R::one() - R::lit(PHYSICALITY_TOLERANCE);
        if let Some(&bad) = nus.iter().find(|&&nu| !(nu >= floor)) {
            return Err(Error::Unphysical {
                nu: bad.to_f64_lossy(),
            });
        }
        Ok(nus)
    }

    /// Covariance matrix of the reduced state on `keep` (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        validate_modes(keep, self.n_modes)?;
        let idx = quadrature_indices(keep);
        Ok(Self::from_matrix_unchecked(self.matrix.select(&idx, &idx)))
    }

    /// Reorders modes: mode `i` of the result is mode `order[i]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: order.len(),
            });
        }
        self.partial_trace(order)
    }

    /// Covariance matrix of the product state `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.matrix.direct_sum(&other.matrix))
    }

    /// `S γ Sᵀ`.
    pub fn apply_symplectic(&self, transform: &SymplecticTransform<R>) -> Result<Self> {
        let s = transform.matrix();
        if s.rows() != self.matrix.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.rows(),
                found: s.rows(),
            });
        }
        let out = s.matmul(&self.matrix).matmul(&s.transpose());
        let half = R::lit(0.5);
        let sym = Matrix::from_fn(out.rows(), out.cols(), |i, j| {
            (out[(i, j)] + out[(j, i)]) * half
        });
        Ok(Self::from_matrix_unchecked(sym))
    }

    /// Appends `extra` vacuum modes after the existing ones.
    pub fn with_vacuum_modes(&self, extra: usize) -> Self {
        self.tensor(&Self::vacuum(extra))
    }
}

/// Free-function form of [`CovarianceMatrix::symplectic_eigenvalues`].
pub fn symplectic_eigenvalues<R: Real>(cm: &CovarianceMatrix<R>) -> Result<Vec<R>> {
    cm.symplectic_eigenvalues()
}

pub(crate) fn validate_modes(modes: &[usize], n_modes: usize) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::EmptyModeSet);
    }
    for (i, &m) in modes.iter().enumerate() {
        if m >= n_modes {
            return Err(Error::ModeOutOfRange { index: m, n_modes });
        }
        if modes[..i].contains(&m) {
            return Err(Error::DuplicateMode { index: m });
        }
    }
    Ok(())
}

pub(crate) fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}
