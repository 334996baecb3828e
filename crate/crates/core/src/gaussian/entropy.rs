use crate::error::Result;
use crate::scalar::Real;

use super::CovarianceMatrix;

/// Below `1 + NEAR_VACUUM` the entropy function switches to its leading-order
/// expansion, which avoids evaluating `0 · log 0`.
const NEAR_VACUUM: f64 = 1e-8;

/// Entropy in bits of a single-mode thermal state with symplectic eigenvalue
/// `nu`:
///
/// `g(ν) = ((ν+1)/2)·log₂((ν+1)/2) − ((ν−1)/2)·log₂((ν−1)/2)`, with `g(1) = 0`.
///
/// Values at or below 1 (including tolerated marginally-unphysical ones)
/// return 0.
pub fn entropy_function<R: Real>(nu: R) -> R {
    let one = R::one();
    let half = R::lit(0.5);
    let delta = nu - one;
    if !(delta > R::zero()) {
        return R::zero();
    }
    let ln2 = R::lit(2.0).ln();
    if delta < R::lit(NEAR_VACUUM) {
        // g(1+δ) = (δ/2)·(1/ln2 + log₂(2/δ)) + O(δ²)
        return delta * half * (one + (R::lit(2.0) / delta).ln()) / ln2;
    }
    let plus = (nu + one) * half;
    let minus = delta * half;
    (plus * plus.ln() - minus * minus.ln()) / ln2
}

/// Von Neumann entropy (bits) of the Gaussian state with covariance `cm`.
pub fn von_neumann_entropy<R: Real>(cm: &CovarianceMatrix<R>) -> Result<R> {
    Ok(cm
        .symplectic_eigenvalues()?
        .into_iter()
        .fold(R::zero(), |acc, nu| acc + entropy_function(nu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::two_mode_squeezed_cm;
    use crate::scalar::DoubleDouble as Dd;

    #[test]
    fn vacuum_has_zero_entropy() {
        assert_eq!(entropy_function(1.0f64), 0.0);
        for n in 1..4 {
            assert_eq!(
                von_neumann_entropy(&CovarianceMatrix::<f64>::vacuum(n)).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn g_of_three_is_two() {
        assert!((entropy_function(3.0f64) - 2.0).abs() < 1e-15);
        let s = von_neumann_entropy(&CovarianceMatrix::<f64>::thermal(3.0).unwrap()).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn g_of_five_matches_closed_form() {
        // 3·log2(3) − 2, evaluated with 50-digit arithmetic
        let expected = 2.754_887_502_163_468_f64;
        assert!((entropy_function(5.0f64) - expected).abs() < 1e-14);
        let dd = entropy_function(Dd::from(5.0));
        assert!((dd.to_f64_lossy() - expected).abs() < 1e-15);
    }

    #[test]
    fn series_branch_is_continuous() {
        let below = 1.0 + NEAR_VACUUM * (1.0 - 1e-12);
        let above = 1.0 + NEAR_VACUUM * (1.0 + 1e-12);
        let a = entropy_function(Dd::from(below)).to_f64_lossy();
        let b = entropy_function(Dd::from(above)).to_f64_lossy();
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn g_is_increasing() {
        let mut prev = 0.0f64;
        for k in 1..200 {
            let g = entropy_function(1.0 + k as f64 * 0.05);
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn pure_two_mode_state_has_zero_entropy() {
        let s = von_neumann_entropy(&two_mode_squeezed_cm(7.0f64).unwrap()).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn single_precision_works_for_simple_states() {
        let s = von_neumann_entropy(&CovarianceMatrix::<f32>::thermal(3.0).unwrap()).unwrap();
        assert!((s - 2.0).abs() < 1e-5);
    }
}
