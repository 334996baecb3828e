use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::covariance::{quadrature_indices, validate_modes};
use super::CovarianceMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    /// Row of this quadrature for `mode` in interleaved ordering.
    #[inline]
    pub fn index(self, mode: usize) -> usize {
        match self {
            Quadrature::X => 2 * mode,
            Quadrature::P => 2 * mode + 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrature::X => "x",
            Quadrature::P => "p",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Quadrature::X => Quadrature::P,
            Quadrature::P => Quadrature::X,
        }
    }
}

/// Gaussian measurement applied to every measured mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    HomodyneX,
    HomodyneP,
    Heterodyne,
}

impl MeasurementKind {
    pub fn homodyne(q: Quadrature) -> Self {
        match q {
            Quadrature::X => MeasurementKind::HomodyneX,
            Quadrature::P => MeasurementKind::HomodyneP,
        }
    }
}

/// Conditional covariance of `keep` after homodyning the quadrature rows
/// `quads` (indices into the full matrix).
///
/// `γ_keep − σ M⁻¹ σᵀ` with `M` the covariance of the measured quadratures.
/// This is the Schur complement with the pseudoinverse of `ΠγΠ`: a single
/// measured quadrature contributes `1/variance`, several contribute the
/// inverse of their joint block. The result does not depend on the
/// outcome values.
pub fn condition_on_quadratures<R: Real>(
    cm: &CovarianceMatrix<R>,
    quads: &[usize],
    keep: &[usize],
) -> Result<CovarianceMatrix<R>> {
    validate_modes(keep, cm.n_modes())?;
    let kept = quadrature_indices(keep);
    for &q in quads {
        if q >= 2 * cm.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: q / 2,
                n_modes: cm.n_modes(),
            });
        }
        if kept.contains(&q) {
            return Err(Error::OverlappingModes { index: q / 2 });
        }
    }
    let g = cm.matrix();
    let base = g.select(&kept, &kept);
    if quads.is_empty() {
        return Ok(CovarianceMatrix::from_matrix_unchecked(base));
    }
    let meas = g.select(quads, quads);
    let inv = meas
        .inverse_spd()
        .ok_or(Error::NonPositiveConditionalVariance)?;
    let sigma = g.select(&kept, quads);
    Ok(schur(&base, &sigma, &inv))
}

/// Conditional covariance of all unmeasured modes after measuring `measured`
/// with `kind`.
///
/// Homodyne uses the quadrature Schur complement of
/// [`condition_on_quadratures`]. Heterodyne is `γ_kept − σ (γ_meas + I)⁻¹ σᵀ`,
/// equivalent to splitting each measured mode on a balanced beam splitter
/// with vacuum and homodyning `x` on one output and `p` on the other.
pub fn condition_on_measurement<R: Real>(
    cm: &CovarianceMatrix<R>,
    measured: &[usize],
    kind: MeasurementKind,
) -> Result<CovarianceMatrix<R>> {
    validate_modes(measured, cm.n_modes())?;
    let keep: Vec<usize> = (0..cm.n_modes())
        .filter(|m| !measured.contains(m))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyModeSet);
    }
    match kind {
        MeasurementKind::HomodyneX | MeasurementKind::HomodyneP => {
            let q = if kind == MeasurementKind::HomodyneX {
                Quadrature::X
            } else {
                Quadrature::P
            };
            let quads: Vec<usize> = measured.iter().map(|&m| q.index(m)).collect();
            condition_on_quadratures(cm, &quads, &keep)
        }
        MeasurementKind::Heterodyne => {
            let g = cm.matrix();
            let kept = quadrature_indices(&keep);
            let meas_idx = quadrature_indices(measured);
            let noisy = g
                .select(&meas_idx, &meas_idx)
                .add(&Matrix::identity(meas_idx.len()));
            let inv = noisy
                .inverse_spd()
                .ok_or(Error::NonPositiveConditionalVariance)?;
            let sigma = g.select(&kept, &meas_idx);
            Ok(schur(&g.select(&kept, &kept), &sigma, &inv))
        }
    }
}

fn schur<R: Real>(base: &Matrix<R>, sigma: &Matrix<R>, inv: &Matrix<R>) -> CovarianceMatrix<R> {
    let out = base.sub(&sigma.matmul(inv).matmul(&sigma.transpose()));
    let half = R::lit(0.5);
    let sym = Matrix::from_fn(out.rows(), out.cols(), |i, j| {
        (out[(i, j)] + out[(j, i)]) * half
    });
    CovarianceMatrix::from_matrix_unchecked(sym)
}
