//! Secret key rates, the infinite-modulation limit and tolerable excess
//! noise.
//!
//! Rates are evaluated in [`Precise`] arithmetic and reported as `f64`.
//! `K = β·I_ab − χ_E` may be negative; it is reported as-is.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::protocol::{
    bob_holevo, channel_output_cm, holevo_bound, information_budget, information_budget_in,
    ChannelParams, InformationBudget, ModeLayout, ModulationVariance, Party, Protocol,
    ReconciliationDirection,
};
use crate::scalar::Real;
use crate::Precise;

/// Modulation variances tried by [`asymptotic_key_rate`].
pub const VARIANCE_LADDER: [f64; 7] = [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

/// Numerical tolerances of the asymptotic and threshold solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Ladder stops once consecutive rates differ by less than this.
    pub rate: f64,
    /// Width of the final bisection bracket on `ε`.
    pub noise: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rate: 1e-6,
            noise: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn validate(self) -> Result<Self> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::param(
                "rate tolerance",
                self.rate,
                "positive and finite",
            ));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return Err(Error::param(
                "noise tolerance",
                self.noise,
                "positive and finite",
            ));
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRateParams {
    pub protocol: Protocol,
    pub direction: ReconciliationDirection,
    pub variance: ModulationVariance,
    pub channel: ChannelParams,
    /// Reconciliation efficiency in `[0, 1]`.
    pub beta: f64,
}

impl KeyRateParams {
    pub fn new(
        protocol: Protocol,
        direction: ReconciliationDirection,
        variance: ModulationVariance,
        channel: ChannelParams,
        beta: f64,
    ) -> Result<Self> {
        Ok(Self {
            protocol,
            direction,
            variance,
            channel,
            beta: check_beta(beta)?,
        })
    }
}

fn check_beta(beta: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&beta) {
        Ok(beta)
    } else {
        Err(Error::param("β", beta, "0 ≤ β ≤ 1"))
    }
}

/// A key rate together with its components.
///
/// `key_rate == beta * mutual_information - eve_holevo` holds exactly for
/// the stored values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRateResult {
    /// `I_ab` (or `χ_aB` for [`quantum_bob_rate`]), bits.
    pub mutual_information: f64,
    /// Eve's Holevo bound, bits.
    pub eve_holevo: f64,
    pub beta: f64,
    /// Bits per retained symbol.
    pub key_rate: f64,
    /// False when an asymptotic evaluation ran out of ladder.
    pub converged: bool,
    pub variance_used: f64,
}

impl KeyRateResult {
    /// Assembles a result from its components.
    pub fn from_parts(
        mutual_information: f64,
        eve_holevo: f64,
        beta: f64,
        converged: bool,
        variance_used: f64,
    ) -> Self {
        Self {
            mutual_information,
            eve_holevo,
            beta,
            key_rate: beta * mutual_information - eve_holevo,
            converged,
            variance_used,
        }
    }

    fn from_budget<R: Real>(budget: &InformationBudget<R>, beta: f64, variance_used: f64) -> Self {
        Self::from_parts(
            budget.mutual_information.to_f64_lossy(),
            budget.eve_holevo.to_f64_lossy(),
            beta,
            true,
            variance_used,
        )
    }
}

/// `K = β·I_ab − χ_E` for the state produced by the channel.
pub fn secret_key_rate(params: &KeyRateParams) -> Result<KeyRateResult> {
    check_beta(params.beta)?;
    let cm: CovarianceMatrix<Precise> = channel_output_cm(params.variance, params.channel);
    let budget = information_budget_in(
        params.protocol,
        &cm,
        &ModeLayout::single_pair(),
        params.direction,
    )?;
    Ok(KeyRateResult::from_budget(
        &budget,
        params.beta,
        params.variance.get(),
    ))
}

/// Key rate of an arbitrary state split between Alice and Bob by `layout`.
/// With several pairs each party measures all of its modes the same way
/// and the rate is per block of pairs.
pub fn key_rate_of_state<R: Real>(
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
    protocol: Protocol,
    direction: ReconciliationDirection,
    beta: f64,
) -> Result<KeyRateResult> {
    let beta = check_beta(beta)?;
    let budget = information_budget_in(protocol, cm, layout, direction)?;
    let v = cm.matrix()[(2 * layout.alice()[0], 2 * layout.alice()[0])].to_f64_lossy();
    Ok(KeyRateResult::from_budget(&budget, beta, v))
}

/// Rate available to a Bob with a quantum memory: `χ_aB − χ_aE`.
///
/// Direct-reconciliation semantics; the result's `mutual_information` field
/// carries `χ_aB` and `beta` is 1.
pub fn quantum_bob_rate(
    protocol: Protocol,
    variance: ModulationVariance,
    channel: ChannelParams,
) -> Result<KeyRateResult> {
    let cm: CovarianceMatrix<Precise> = channel_output_cm(variance, channel);
    let chi_ab = bob_holevo(protocol, &cm)?;
    let chi_ae = holevo_bound(protocol, &cm, Party::Alice)?;
    Ok(KeyRateResult::from_parts(
        chi_ab.to_f64_lossy(),
        chi_ae.to_f64_lossy(),
        1.0,
        true,
        variance.get(),
    ))
}

/// Full information budget (including `χ_aB`) for one parameter set.
pub fn budget_for(params: &KeyRateParams) -> Result<InformationBudget<f64>> {
    let cm: CovarianceMatrix<Precise> = channel_output_cm(params.variance, params.channel);
    let b = information_budget(params.protocol, &cm, params.direction)?;
    Ok(InformationBudget {
        mutual_information: b.mutual_information.to_f64_lossy(),
        eve_holevo: b.eve_holevo.to_f64_lossy(),
        bob_holevo: b.bob_holevo.map(Real::to_f64_lossy),
    })
}

/// Rate in the limit of infinite modulation.
///
/// Walks [`VARIANCE_LADDER`] until two consecutive rates agree within
/// `tol.rate`. When the ladder runs out the last rate is returned with
/// `converged = false`.
pub fn asymptotic_key_rate(
    protocol: Protocol,
    direction: ReconciliationDirection,
    channel: ChannelParams,
    beta: f64,
    tol: &Tolerances,
) -> Result<KeyRateResult> {
    let mut prev: Option<KeyRateResult> = None;
    for v in VARIANCE_LADDER {
        let params = KeyRateParams::new(
            protocol,
            direction,
            ModulationVariance::new(v)?,
            channel,
            beta,
        )?;
        let cur = secret_key_rate(&params)?;
        if let Some(p) = prev {
            if (cur.key_rate - p.key_rate).abs() < tol.rate {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    let mut last = prev.expect("ladder is not empty");
    last.converged = false;
    Ok(last)
}

/// Largest tolerable excess noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    /// Largest `ε` found with a strictly positive asymptotic rate (0 if
    /// there is none).
    pub excess_noise: f64,
    /// Asymptotic rate at `ε = 0`.
    pub rate_at_zero_noise: f64,
    /// False if any inner asymptotic evaluation failed to converge.
    pub converged: bool,
}

/// Upper end of the search for a bracketing `ε`.
const NOISE_SEARCH_LIMIT: f64 = 1e3;

/// Supremum of the `ε` with a strictly positive asymptotic key rate.
///
/// Returns 0 when `K ≤ 0` already at `ε = 0`. Otherwise the bracket
/// `[0, ε_hi]` is grown geometrically until `K(ε_hi) ≤ 0` and bisected to
/// width `tol.noise`; the lower end is returned.
pub fn tolerable_excess_noise(
    transmittance: f64,
    protocol: Protocol,
    direction: ReconciliationDirection,
    beta: f64,
    tol: &Tolerances,
) -> Result<Threshold> {
    let tol = tol.validate()?;
    check_beta(beta)?;
    let mut converged = true;
    let mut rate = |eps: f64| -> Result<f64> {
        let r = asymptotic_key_rate(
            protocol,
            direction,
            ChannelParams::new(transmittance, eps)?,
            beta,
            &tol,
        )?;
        converged &= r.converged;
        Ok(r.key_rate)
    };
    let k0 = rate(0.0)?;
    if !(k0 > 0.0) {
        return Ok(Threshold {
            excess_noise: 0.0,
            rate_at_zero_noise: k0,
            converged,
        });
    }
    let mut lo = 0.0;
    let mut hi = 0.01;
    while rate(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > NOISE_SEARCH_LIMIT {
            return Err(Error::param(
                "ε",
                hi,
                "a finite noise level at which the key rate vanishes",
            ));
        }
    }
    while hi - lo > tol.noise {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold {
        excess_noise: lo,
        rate_at_zero_noise: k0,
        converged,
    })
}

/// One cell of a threshold sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub transmittance: f64,
    pub protocol: Protocol,
    pub direction: ReconciliationDirection,
    pub outcome: std::result::Result<Threshold, Error>,
}

/// Tolerable excess noise over a grid of transmittances.
///
/// Rows are ordered by transmittance, then protocol, then direction (in the
/// order given), independent of how many threads run the cells. `jobs = 0`
/// uses rayon's default pool. A failing cell records its error and the
/// sweep continues.
pub fn sweep_thresholds(
    grid: &[f64],
    protocols: &[Protocol],
    directions: &[ReconciliationDirection],
    beta: f64,
    tol: &Tolerances,
    jobs: usize,
) -> Result<Vec<SweepCell>> {
    check_grid(grid)?;
    check_beta(beta)?;
    let tol = tol.validate()?;
    let cells: Vec<(f64, Protocol, ReconciliationDirection)> = grid
        .iter()
        .flat_map(|&t| {
            protocols
                .iter()
                .flat_map(move |&p| directions.iter().map(move |&d| (t, p, d)))
        })
        .collect();
    let run = || {
        cells
            .par_iter()
            .map(|&(t, p, d)| SweepCell {
                transmittance: t,
                protocol: p,
                direction: d,
                outcome: tolerable_excess_noise(t, p, d, beta, &tol),
            })
            .collect()
    };
    if jobs == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|_| Error::param("jobs", jobs as f64, "a thread count the system can provide"))?;
    Ok(pool.install(run))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", 0.0, "at least one transmittance"));
    }
    for (i, &t) in grid.iter().enumerate() {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::param("T", t, "0 < T ≤ 1"));
        }
        if i > 0 && !(t > grid[i - 1]) {
            return Err(Error::param("grid", t, "strictly increasing"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::reverse_budget_by_role_swap;
    use proptest::prelude::*;
    use ReconciliationDirection::{Direct, Reverse};

    fn params(
        p: Protocol,
        d: ReconciliationDirection,
        v: f64,
        t: f64,
        e: f64,
        b: f64,
    ) -> KeyRateParams {
        KeyRateParams::new(
            p,
            d,
            ModulationVariance::new(v).unwrap(),
            ChannelParams::new(t, e).unwrap(),
            b,
        )
        .unwrap()
    }

    fn ch(t: f64, e: f64) -> ChannelParams {
        ChannelParams::new(t, e).unwrap()
    }

    #[test]
    fn coherent_homodyne_fixture() {
        let r = secret_key_rate(&params(
            Protocol::COHERENT_HOMODYNE,
            Direct,
            2.0,
            1.0,
            0.0,
            1.0,
        ))
        .unwrap();
        assert!((r.key_rate - 0.5).abs() < 1e-12);
        assert!(r.eve_holevo.abs() < 1e-12);
    }

    #[test]
    fn zero_efficiency_leaves_only_eve() {
        let r = secret_key_rate(&params(
            Protocol::SQUEEZED_HETERODYNE,
            Reverse,
            30.0,
            0.4,
            0.1,
            0.0,
        ))
        .unwrap();
        assert_eq!(r.key_rate, -r.eve_holevo);
        assert!(r.key_rate <= 0.0);
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        assert!(KeyRateParams::new(
            Protocol::COHERENT_HOMODYNE,
            Direct,
            ModulationVariance::new(2.0).unwrap(),
            ch(0.5, 0.0),
            1.2
        )
        .is_err());
    }

    #[test]
    fn quantum_bob_on_perfect_line() {
        for p in Protocol::ALL {
            let v = ModulationVariance::new(4.0).unwrap();
            let r = quantum_bob_rate(p, v, ch(1.0, 0.0)).unwrap();
            assert!(r.key_rate > 0.0);
            assert!((r.key_rate - r.mutual_information).abs() < 1e-9);
            let none =
                quantum_bob_rate(p, ModulationVariance::new(1.0).unwrap(), ch(0.6, 0.0)).unwrap();
            assert!(none.key_rate.abs() < 1e-12);
        }
    }

    #[test]
    fn lossless_line_does_not_converge() {
        let r = asymptotic_key_rate(
            Protocol::COHERENT_HOMODYNE,
            Direct,
            ch(1.0, 0.0),
            1.0,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.variance_used, 1e8);
    }

    #[test]
    fn direct_reconciliation_boundary_and_reverse_reconciliation() {
        let tol = Tolerances::default();
        let dr = asymptotic_key_rate(Protocol::COHERENT_HOMODYNE, Direct, ch(0.5, 0.0), 1.0, &tol)
            .unwrap();
        assert!(dr.converged);
        assert!(dr.key_rate.abs() < 1e-5, "{}", dr.key_rate);
        for p in Protocol::ALL {
            let rr = asymptotic_key_rate(p, Reverse, ch(0.5, 0.0), 1.0, &tol).unwrap();
            assert!(rr.key_rate > 0.1, "{p}: {}", rr.key_rate);
        }
    }

    #[test]
    fn threshold_is_zero_below_half_for_direct() {
        let tol = Tolerances::default();
        for p in Protocol::ALL {
            let th = tolerable_excess_noise(0.4, p, Direct, 1.0, &tol).unwrap();
            assert_eq!(th.excess_noise, 0.0);
            assert!(th.rate_at_zero_noise < 0.0);
        }
    }

    #[test]
    fn threshold_brackets_sign_change() {
        let tol = Tolerances::default();
        let p = Protocol::SQUEEZED_HOMODYNE;
        let th = tolerable_excess_noise(0.7, p, Reverse, 1.0, &tol).unwrap();
        assert!(th.excess_noise > 0.0);
        let k = |e: f64| {
            asymptotic_key_rate(p, Reverse, ch(0.7, e), 1.0, &tol)
                .unwrap()
                .key_rate
        };
        assert!(k(th.excess_noise) > 0.0);
        assert!(k(th.excess_noise + tol.noise) <= 0.0);
    }

    #[test]
    fn sweep_order_and_consistency() {
        let tol = Tolerances::default();
        let grid = [0.25, 0.75];
        let protocols = [Protocol::SQUEEZED_HOMODYNE, Protocol::COHERENT_HETERODYNE];
        let cells = sweep_thresholds(&grid, &protocols, &[Direct, Reverse], 1.0, &tol, 2).unwrap();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].transmittance, 0.25);
        assert_eq!(cells[1].direction, Reverse);
        assert_eq!(cells[2].protocol, Protocol::COHERENT_HETERODYNE);
        assert_eq!(cells[4].transmittance, 0.75);
        for c in &cells[..4] {
            if c.direction == Direct {
                assert_eq!(c.outcome.as_ref().unwrap().excess_noise, 0.0);
            }
        }
        assert!(cells[4].outcome.as_ref().unwrap().excess_noise > 0.0);
        let single = tolerable_excess_noise(0.75, protocols[1], Reverse, 1.0, &tol).unwrap();
        assert_eq!(cells[7].outcome.as_ref().unwrap(), &single);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let tol = Tolerances::default();
        let p = [Protocol::SQUEEZED_HOMODYNE];
        let d = [Direct];
        assert!(sweep_thresholds(&[0.5, 0.5], &p, &d, 1.0, &tol, 1).is_err());
        assert!(sweep_thresholds(&[0.0, 0.5], &p, &d, 1.0, &tol, 1).is_err());
        assert!(sweep_thresholds(&[], &p, &d, 1.0, &tol, 1).is_err());
    }

    #[test]
    fn role_swap_agrees_for_squeezed_homodyne() {
        let cm: CovarianceMatrix<Precise> =
            channel_output_cm(ModulationVariance::new(40.0).unwrap(), ch(0.35, 0.02));
        let layout = ModeLayout::single_pair();
        let p = Protocol::SQUEEZED_HOMODYNE;
        let rr = information_budget_in(p, &cm, &layout, Reverse).unwrap();
        let swapped = reverse_budget_by_role_swap(p, &cm, &layout).unwrap();
        let k1 = (rr.mutual_information - rr.eve_holevo).to_f64_lossy();
        let k2 = (swapped.mutual_information - swapped.eve_holevo).to_f64_lossy();
        assert!((k1 - k2).abs() < 1e-12);
    }

    fn any_params() -> impl Strategy<Value = KeyRateParams> {
        (
            0usize..4,
            any::<bool>(),
            1.0f64..1e4,
            0.01f64..1.0,
            0.0f64..0.5,
            0.0f64..=1.0,
        )
            .prop_map(|(p, rr, v, t, e, b)| {
                params(
                    Protocol::ALL[p],
                    if rr { Reverse } else { Direct },
                    v,
                    t,
                    e,
                    b,
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decomposition_identity(p in any_params()) {
            let r = secret_key_rate(&p).unwrap();
            prop_assert_eq!(r.key_rate, r.beta * r.mutual_information - r.eve_holevo);
        }

        #[test]
        fn rate_is_affine_in_beta(p in any_params()) {
            let at = |b: f64| secret_key_rate(&KeyRateParams { beta: b, ..p }).unwrap();
            let (k0, k1, kb) = (at(0.0), at(1.0), at(p.beta));
            prop_assert!((k1.key_rate - k0.key_rate - k1.mutual_information).abs() < 1e-12);
            prop_assert!(kb.key_rate <= k1.key_rate + 1e-15);
        }

        #[test]
        fn rate_does_not_increase_with_noise(p in any_params(), d in 1e-4f64..0.5) {
            let base = secret_key_rate(&p).unwrap().key_rate;
            let noisier = KeyRateParams {
                channel: ChannelParams::new(p.channel.transmittance(), p.channel.excess_noise() + d).unwrap(),
                ..p
            };
            prop_assert!(secret_key_rate(&noisier).unwrap().key_rate <= base + 1e-12);
        }

        #[test]
        fn quantum_bob_dominates(p in any_params()) {
            let q = quantum_bob_rate(p.protocol, p.variance, p.channel).unwrap();
            let k = secret_key_rate(&KeyRateParams { beta: 1.0, direction: Direct, ..p }).unwrap();
            prop_assert!(q.key_rate >= k.key_rate - 1e-9);
        }
    }
}
