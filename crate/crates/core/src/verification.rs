//! Randomised checks of the entropic inequalities behind the security
//! proof, run on seeded random Gaussian states.
//!
//! Each check evaluates a signed margin per draw (non-negative when the
//! property holds exactly) and counts a violation when the margin drops
//! below `−tolerance`. Draws are independent, derive their random stream
//! from the seed and the trial index, and may run in parallel; the report
//! only depends on the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{
    beam_splitter_symplectic, phase_rotation_symplectic, squeezer_symplectic, CovarianceMatrix,
    SymplecticTransform,
};
use crate::keyrate::key_rate_of_state;
use crate::linalg::Matrix;
use crate::protocol::{
    bob_holevo, mutual_information, ModeLayout, Protocol, ReconciliationDirection,
};

/// Largest single-mode squeezing parameter used by [`random_gaussian_cm`].
pub const MAX_SQUEEZING: f64 = 2.0;

pub const HOLEVO_TOLERANCE: f64 = 1e-9;
pub const SUPER_ADDITIVITY_TOLERANCE: f64 = 1e-9;
pub const GAUSSIFICATION_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomStateSpec {
    pub n_modes: usize,
    /// Symplectic eigenvalues are drawn uniformly from `[1, nu_max]`.
    pub nu_max: f64,
    pub seed: u64,
}

impl RandomStateSpec {
    pub fn new(n_modes: usize, nu_max: f64, seed: u64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::EmptyModeSet);
        }
        if !(nu_max >= 1.0 && nu_max.is_finite()) {
            return Err(Error::param("ν_max", nu_max, "finite and ν_max ≥ 1"));
        }
        Ok(Self {
            n_modes,
            nu_max,
            seed,
        })
    }

    /// Spec of draw number `trial` in a check: same parameters, an
    /// independent random stream.
    pub fn for_trial(&self, trial: usize) -> TrialSpec {
        TrialSpec {
            spec: *self,
            trial: trial as u64,
        }
    }
}

/// A single reproducible draw: the base spec plus the trial index, which
/// selects the generator's stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub spec: RandomStateSpec,
    pub trial: u64,
}

impl TrialSpec {
    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(self.trial);
        rng
    }
}

/// Random Gaussian state `S·D·Sᵀ` for `spec` (trial 0).
pub fn random_gaussian_cm(spec: &RandomStateSpec) -> CovarianceMatrix<f64> {
    random_gaussian_cm_with(&mut spec.for_trial(0).rng(), spec.n_modes, spec.nu_max)
}

/// Random Gaussian state for one draw of a check.
pub fn random_trial_cm(trial: &TrialSpec) -> CovarianceMatrix<f64> {
    random_gaussian_cm_with(&mut trial.rng(), trial.spec.n_modes, trial.spec.nu_max)
}

/// `D` is a Williamson diagonal with entries in `[1, nu_max]`; `S` is a
/// passive network, a layer of single-mode squeezers (`r ≤ MAX_SQUEEZING`)
/// and a second passive network, which covers every symplectic matrix.
pub fn random_gaussian_cm_with<G: Rng>(
    rng: &mut G,
    n_modes: usize,
    nu_max: f64,
) -> CovarianceMatrix<f64> {
    let nus: Vec<f64> = (0..n_modes)
        .flat_map(|_| {
            let nu = if nu_max > 1.0 {
                rng.gen_range(1.0..=nu_max)
            } else {
                1.0
            };
            [nu, nu]
        })
        .collect();
    let mut s = random_passive(rng, n_modes);
    for m in 0..n_modes {
        let r = rng.gen_range(0.0..=MAX_SQUEEZING);
        s = s.then(&squeezer_symplectic(r, m, n_modes).expect("valid mode"));
    }
    s = s.then(&random_passive(rng, n_modes));
    CovarianceMatrix::from_matrix_unchecked(Matrix::diagonal(&nus))
        .apply_symplectic(&s)
        .expect("dimensions match")
}

fn random_passive<G: Rng>(rng: &mut G, n_modes: usize) -> SymplecticTransform<f64> {
    let mut s = SymplecticTransform::identity(n_modes);
    let rotate = |s: SymplecticTransform<f64>, rng: &mut G| {
        (0..n_modes).fold(s, |acc, m| {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            acc.then(&phase_rotation_symplectic(theta, m, n_modes).expect("valid mode"))
        })
    };
    s = rotate(s, rng);
    for i in 0..n_modes {
        for j in i + 1..n_modes {
            let tau = rng.gen_range(0.0..=1.0);
            s = s.then(&beam_splitter_symplectic(tau, (i, j), n_modes).expect("valid modes"));
            s = rotate(s, rng);
        }
    }
    s
}

/// Outcome of one randomised check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub trials: usize,
    /// Margins evaluated (trials × protocol/direction combinations).
    pub evaluations: usize,
    /// Margins below `−tolerance`.
    pub violations: usize,
    /// Draws whose evaluation failed outright.
    pub errors: usize,
    /// Smallest margin seen.
    pub worst_margin: f64,
    /// Trial index of the smallest margin.
    pub worst_trial: usize,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

/// Runs `margins` on every trial and aggregates. The aggregation is
/// independent of execution order: ties on the worst margin go to the
/// lowest trial index.
fn run_check<F>(name: &'static str, trials: usize, tolerance: f64, margins: F) -> CheckReport
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials).into_par_iter().map(&margins).collect();
    let mut report = CheckReport {
        name,
        trials,
        evaluations: 0,
        violations: 0,
        errors: 0,
        worst_margin: f64::INFINITY,
        worst_trial: 0,
        tolerance,
    };
    for (trial, outcome) in per_trial.into_iter().enumerate() {
        match outcome {
            Ok(ms) => {
                for m in ms {
                    report.evaluations += 1;
                    if !(m >= -tolerance) {
                        report.violations += 1;
                    }
                    if m < report.worst_margin || m.is_nan() {
                        report.worst_margin = m;
                        report.worst_trial = trial;
                    }
                }
            }
            Err(_) => report.errors += 1,
        }
    }
    report
}

fn require_modes(spec: &RandomStateSpec, n: usize) -> Result<()> {
    if spec.n_modes != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: spec.n_modes,
        });
    }
    Ok(())
}

/// `χ_aB − I_ab` for each protocol on one draw.
pub fn holevo_margins(cm: &CovarianceMatrix<f64>) -> Result<Vec<f64>> {
    Protocol::ALL
        .iter()
        .map(|&p| Ok(bob_holevo(p, cm)? - mutual_information(p, cm)?))
        .collect()
}

/// `I_ab ≤ χ_aB` on random two-mode states for all four protocols.
pub fn check_holevo_inequality(trials: usize, spec: &RandomStateSpec) -> Result<CheckReport> {
    require_modes(spec, 2)?;
    Ok(run_check(
        "holevo-inequality",
        trials,
        HOLEVO_TOLERANCE,
        |t| holevo_margins(&random_trial_cm(&spec.for_trial(t))),
    ))
}

/// Every protocol and direction at `β = 1`.
fn all_settings() -> impl Iterator<Item = (Protocol, ReconciliationDirection)> {
    Protocol::ALL.into_iter().flat_map(|p| {
        ReconciliationDirection::ALL
            .into_iter()
            .map(move |d| (p, d))
    })
}

fn rate(
    cm: &CovarianceMatrix<f64>,
    layout: &ModeLayout,
    p: Protocol,
    d: ReconciliationDirection,
) -> Result<f64> {
    Ok(key_rate_of_state(cm, layout, p, d, 1.0)?.key_rate)
}

/// `K(A1A2 : B1B2) − K(A1 : B1) − K(A2 : B2)` for a four-mode state ordered
/// `A1, B1, A2, B2`, for every protocol and direction.
pub fn super_additivity_margins(cm: &CovarianceMatrix<f64>) -> Result<Vec<f64>> {
    let joint = ModeLayout::interleaved_pairs(2);
    let single = ModeLayout::single_pair();
    let first = cm.partial_trace(&[0, 1])?;
    let second = cm.partial_trace(&[2, 3])?;
    all_settings()
        .map(|(p, d)| {
            Ok(rate(cm, &joint, p, d)?
                - rate(&first, &single, p, d)?
                - rate(&second, &single, p, d)?)
        })
        .collect()
}

/// Strong super-additivity of the key rate on random four-mode states.
pub fn check_super_additivity(trials: usize, spec: &RandomStateSpec) -> Result<CheckReport> {
    require_modes(spec, 4)?;
    Ok(run_check(
        "super-additivity",
        trials,
        SUPER_ADDITIVITY_TOLERANCE,
        |t| super_additivity_margins(&random_trial_cm(&spec.for_trial(t))),
    ))
}

/// Additivity on product states `γ1 ⊗ γ2` of two random two-mode states:
/// margin `−|K_joint − K1 − K2|`.
pub fn check_product_additivity(trials: usize, spec: &RandomStateSpec) -> Result<CheckReport> {
    require_modes(spec, 2)?;
    Ok(run_check(
        "product-additivity",
        trials,
        SUPER_ADDITIVITY_TOLERANCE,
        |t| {
            // two independent draws per trial
            let g1 = random_trial_cm(&spec.for_trial(2 * t));
            let g2 = random_trial_cm(&spec.for_trial(2 * t + 1));
            let m = super_additivity_margins(&g1.tensor(&g2))?;
            Ok(m.into_iter().map(|x| -x.abs()).collect())
        },
    ))
}

/// A network of beam splitters acting on copy indices, applied in the
/// same way to Alice's copies and to Bob's copies.
///
/// Only real beam splitters are allowed: the network must not mix `x` with
/// `p`, otherwise it does not commute with the quadrature measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct PassiveNetwork {
    copies: usize,
    splitters: Vec<(f64, usize, usize)>,
}

impl PassiveNetwork {
    /// `splitters` are `(transmittance, copy_i, copy_j)` applied in order.
    pub fn new(copies: usize, splitters: Vec<(f64, usize, usize)>) -> Result<Self> {
        for &(tau, i, j) in &splitters {
            beam_splitter_symplectic(tau, (i, j), copies)?;
        }
        Ok(Self { copies, splitters })
    }

    /// A single 50:50 beam splitter between two copies.
    pub fn balanced_pair() -> Self {
        Self {
            copies: 2,
            splitters: vec![(0.5, 0, 1)],
        }
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// The network on `A1, B1, A2, B2, …` ordering, acting on Alice's and
    /// Bob's copies alike.
    pub fn symplectic(&self) -> SymplecticTransform<f64> {
        let n = 2 * self.copies;
        let mut s = SymplecticTransform::identity(n);
        for &(tau, i, j) in &self.splitters {
            for side in 0..2 {
                let bs = beam_splitter_symplectic(tau, (2 * i + side, 2 * j + side), n)
                    .expect("validated at construction");
                s = s.then(&bs);
            }
        }
        s
    }
}

/// `−|K(U γ^{⊗N} Uᵀ) − N·K(γ)|` for every protocol and direction.
pub fn gaussification_margins(
    cm: &CovarianceMatrix<f64>,
    network: &PassiveNetwork,
) -> Result<Vec<f64>> {
    let n = network.copies();
    let layout = ModeLayout::interleaved_pairs(n);
    let single = ModeLayout::single_pair();
    let mut copies = cm.clone();
    for _ in 1..n {
        copies = copies.tensor(cm);
    }
    let mixed = copies.apply_symplectic(&network.symplectic())?;
    all_settings()
        .map(|(p, d)| {
            let k = rate(cm, &single, p, d)?;
            Ok(-(rate(&mixed, &layout, p, d)? - n as f64 * k).abs())
        })
        .collect()
}

/// Invariance of the multi-pair key rate under a passive network applied
/// to copies of random two-mode states.
pub fn check_gaussification_invariance(
    trials: usize,
    spec: &RandomStateSpec,
    network: &PassiveNetwork,
) -> Result<CheckReport> {
    require_modes(spec, 2)?;
    Ok(run_check(
        "gaussification-invariance",
        trials,
        GAUSSIFICATION_TOLERANCE,
        |t| gaussification_margins(&random_trial_cm(&spec.for_trial(t)), network),
    ))
}

/// Trial counts and state parameters for the whole verification suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub nu_max: f64,
    pub holevo_trials: usize,
    pub super_additivity_trials: usize,
    pub product_trials: usize,
    pub gaussification_trials: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            nu_max: 5.0,
            holevo_trials: 500,
            super_additivity_trials: 200,
            product_trials: 50,
            gaussification_trials: 100,
        }
    }

    /// The same number of trials for every check.
    pub fn with_trials(self, trials: usize) -> Self {
        Self {
            holevo_trials: trials,
            super_additivity_trials: trials,
            product_trials: trials,
            gaussification_trials: trials,
            ..self
        }
    }
}

/// Runs every check in a fixed order.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let two = RandomStateSpec::new(2, config.nu_max, config.seed)?;
    let four = RandomStateSpec::new(4, config.nu_max, config.seed)?;
    Ok(vec![
        check_holevo_inequality(config.holevo_trials, &two)?,
        check_super_additivity(config.super_additivity_trials, &four)?,
        check_product_additivity(config.product_trials, &two)?,
        check_gaussification_invariance(
            config.gaussification_trials,
            &two,
            &PassiveNetwork::balanced_pair(),
        )?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrate::{secret_key_rate, KeyRateParams};
    use crate::protocol::{channel_output_cm, ChannelParams, ModulationVariance};
    use crate::Precise;

    fn spec(n: usize, nu_max: f64, seed: u64) -> RandomStateSpec {
        RandomStateSpec::new(n, nu_max, seed).unwrap()
    }

    #[test]
    fn pure_draws_have_unit_spectrum() {
        for t in 0..20 {
            let g = random_trial_cm(&spec(3, 1.0, 11).for_trial(t));
            for nu in g.symplectic_eigenvalues().unwrap() {
                assert!((nu - 1.0).abs() < 1e-9, "{nu}");
            }
        }
    }

    #[test]
    fn draws_are_reproducible_and_distinct() {
        let s = spec(2, 4.0, 3);
        assert_eq!(random_gaussian_cm(&s), random_gaussian_cm(&s));
        assert_ne!(
            random_trial_cm(&s.for_trial(1)),
            random_trial_cm(&s.for_trial(2))
        );
        assert_ne!(random_gaussian_cm(&s), random_gaussian_cm(&spec(2, 4.0, 4)));
    }

    #[test]
    fn draws_are_physical() {
        let s = spec(2, 6.0, 99);
        for t in 0..1000 {
            let g = random_trial_cm(&s.for_trial(t));
            CovarianceMatrix::new(g.into_matrix()).unwrap();
        }
    }

    #[test]
    fn spec_validation() {
        assert!(RandomStateSpec::new(0, 2.0, 0).is_err());
        assert!(RandomStateSpec::new(2, 0.5, 0).is_err());
        assert!(check_holevo_inequality(1, &spec(4, 2.0, 0)).is_err());
        assert!(check_super_additivity(1, &spec(2, 2.0, 0)).is_err());
        assert!(PassiveNetwork::new(2, vec![(1.5, 0, 1)]).is_err());
    }

    #[test]
    fn holevo_check_passes_and_reports_worst_draw() {
        let s = spec(2, 5.0, 1);
        let r = check_holevo_inequality(60, &s).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.evaluations, 240);
        let again = holevo_margins(&random_trial_cm(&s.for_trial(r.worst_trial))).unwrap();
        let min = again.into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.worst_margin);
    }

    #[test]
    fn unmodulated_state_gives_zero_on_both_sides() {
        let g = CovarianceMatrix::<f64>::vacuum(2);
        for m in holevo_margins(&g).unwrap() {
            assert!(m.abs() < 1e-15);
        }
    }

    #[test]
    fn super_additivity_passes() {
        let r = check_super_additivity(30, &spec(4, 4.0, 5)).unwrap();
        assert!(r.passed(), "{r:?}");
        let p = check_product_additivity(10, &spec(2, 4.0, 5)).unwrap();
        assert!(p.passed(), "{p:?}");
    }

    #[test]
    fn joint_rate_on_two_copies_is_twice_the_rate() {
        let g = random_gaussian_cm(&spec(2, 3.0, 8));
        for m in super_additivity_margins(&g.tensor(&g)).unwrap() {
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn gaussification_of_vacuum_and_channel_states() {
        let net = PassiveNetwork::balanced_pair();
        for m in gaussification_margins(&CovarianceMatrix::vacuum(2), &net).unwrap() {
            assert!(m.abs() < 1e-12);
        }
        let g = channel_output_cm(
            ModulationVariance::new(2.0).unwrap(),
            ChannelParams::new(0.8, 0.02).unwrap(),
        );
        for m in gaussification_margins(&g, &net).unwrap() {
            assert!(m.abs() < 1e-8, "{m}");
        }
        let r = check_gaussification_invariance(20, &spec(2, 4.0, 2), &net).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn other_networks_also_leave_rate_unchanged() {
        let net = PassiveNetwork::new(3, vec![(0.3, 0, 1), (0.8, 1, 2), (0.5, 0, 2)]).unwrap();
        let g = random_gaussian_cm(&spec(2, 3.0, 21));
        for m in gaussification_margins(&g, &net).unwrap() {
            assert!(m.abs() < 1e-8, "{m}");
        }
    }

    #[test]
    fn single_pair_rate_is_the_secret_key_rate() {
        let v = ModulationVariance::new(12.0).unwrap();
        let ch = ChannelParams::new(0.45, 0.07).unwrap();
        let cm: CovarianceMatrix<Precise> = channel_output_cm(v, ch);
        for (p, d) in all_settings() {
            let a = key_rate_of_state(&cm, &ModeLayout::single_pair(), p, d, 0.9).unwrap();
            let b = secret_key_rate(&KeyRateParams::new(p, d, v, ch, 0.9).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let s = spec(2, 5.0, 17);
        assert_eq!(
            check_holevo_inequality(25, &s).unwrap(),
            check_holevo_inequality(25, &s).unwrap()
        );
    }
}
