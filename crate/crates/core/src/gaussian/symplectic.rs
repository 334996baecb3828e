use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Accepted `max |SΩSᵀ − Ω|`, relative to `max(1, max|S|²)`.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-10;

/// `Ω = ⊕ [[0, 1], [−1, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm<R> {
    matrix: Matrix<R>,
}

impl<R: Real> SymplecticForm<R> {
    pub fn new(n_modes: usize) -> Self {
        let mut m = Matrix::zeros(2 * n_modes, 2 * n_modes);
        for k in 0..n_modes {
            m[(2 * k, 2 * k + 1)] = R::one();
            m[(2 * k + 1, 2 * k)] = -R::one();
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<R> {
        self.matrix
    }
}

/// A real symplectic matrix, `S Ω Sᵀ = Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTransform<R> {
    matrix: Matrix<R>,
}

impl<R: Real> SymplecticTransform<R> {
    pub fn new(matrix: Matrix<R>) -> Result<Self> {
        if !matrix.is_square() || !matrix.rows().is_multiple_of(2) || matrix.rows() == 0 {
            return Err(Error::BadShape {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let omega = SymplecticForm::new(matrix.rows() / 2).into_matrix();
        let deviation = matrix
            .matmul(&omega)
            .matmul(&matrix.transpose())
            .max_abs_diff(&omega)
            .to_f64_lossy();
        let scale = matrix.max_abs().to_f64_lossy().powi(2).max(1.0);
        if !(deviation <= SYMPLECTIC_TOLERANCE * scale) {
            return Err(Error::NotSymplectic { deviation });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: Matrix<R>) -> Self {
        Self { matrix }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::identity(2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.rows() / 2
    }

    pub fn matrix(&self) -> &Matrix<R> {
        &self.matrix
    }

    /// `next · self`: apply `self` first, then `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self::from_matrix_unchecked(next.matrix.matmul(&self.matrix))
    }

    /// Inverse, `−Ω Sᵀ Ω`.
    pub fn inverse(&self) -> Self {
        let omega = SymplecticForm::new(self.n_modes()).into_matrix();
        Self::from_matrix_unchecked(
            omega
                .matmul(&self.matrix.transpose())
                .matmul(&omega)
                .scale(-R::one()),
        )
    }
}

fn check_mode(index: usize, n_modes: usize) -> Result<()> {
    if index >= n_modes {
        return Err(Error::ModeOutOfRange { index, n_modes });
    }
    Ok(())
}

/// Beam splitter of intensity transmittance `τ` between modes `i` and `j`.
///
/// Each quadrature pair `(q_i, q_j)` is mapped by
/// `[[√τ, √(1−τ)], [−√(1−τ), √τ]]`; `x` and `p` never mix.
pub fn beam_splitter_symplectic<R: Real>(
    transmittance: R,
    modes: (usize, usize),
    n_modes: usize,
) -> Result<SymplecticTransform<R>> {
    if !(transmittance >= R::zero() && transmittance <= R::one()) {
        return Err(Error::param(
            "transmittance",
            transmittance.to_f64_lossy(),
            "0 ≤ τ ≤ 1",
        ));
    }
    let (i, j) = modes;
    check_mode(i, n_modes)?;
    check_mode(j, n_modes)?;
    if i == j {
        return Err(Error::DuplicateMode { index: i });
    }
    let t = transmittance.sqrt();
    let r = (R::one() - transmittance).sqrt();
    let mut m = Matrix::identity(2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = t;
        m[(a, b)] = r;
        m[(b, a)] = -r;
        m[(b, b)] = t;
    }
    Ok(SymplecticTransform::from_matrix_unchecked(m))
}

/// Phase rotation by `theta` on one mode: `x' = cos θ x + sin θ p`.
pub fn phase_rotation_symplectic<R: Real>(
    theta: R,
    mode: usize,
    n_modes: usize,
) -> Result<SymplecticTransform<R>> {
    check_mode(mode, n_modes)?;
    let (s, c) = theta.sin_cos();
    let mut m = Matrix::identity(2 * n_modes);
    let (x, p) = (2 * mode, 2 * mode + 1);
    m[(x, x)] = c;
    m[(x, p)] = s;
    m[(p, x)] = -s;
    m[(p, p)] = c;
    Ok(SymplecticTransform::from_matrix_unchecked(m))
}

/// Single-mode squeezer `diag(e^{−r}, e^{r})`.
pub fn squeezer_symplectic<R: Real>(
    r: R,
    mode: usize,
    n_modes: usize,
) -> Result<SymplecticTransform<R>> {
    check_mode(mode, n_modes)?;
    if !r.is_finite() {
        return Err(Error::param("squeezing", r.to_f64_lossy(), "finite"));
    }
    let mut m = Matrix::identity(2 * n_modes);
    m[(2 * mode, 2 * mode)] = (-r).exp();
    m[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    Ok(SymplecticTransform::from_matrix_unchecked(m))
}
