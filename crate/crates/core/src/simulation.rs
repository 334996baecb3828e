//! Monte-Carlo prepare-and-measure simulation and parameter estimation.
//!
//! Outcomes are drawn directly from their joint Gaussian distribution,
//! derived from `channel_output_cm`: a homodyne records a quadrature of
//! its mode, a heterodyne records `(q + q_vac)/√2` for both quadratures,
//! i.e. the quadrature scaled by `1/√2` plus half a unit of vacuum noise.
//!
//! Generation is split into chunks of [`CHUNK_ROUNDS`] rounds; chunk `k`
//! uses stream `k` of a ChaCha generator seeded with the batch seed, so
//! the batch does not depend on how many threads produce it.

use std::io::{self, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, Quadrature, PHYSICALITY_TOLERANCE};
use crate::keyrate::{key_rate_of_state, KeyRateResult};
use crate::linalg::Matrix;
use crate::protocol::{
    channel_output_cm, BobMeasurement, ChannelParams, ModeLayout, ModulationVariance, Protocol,
    ReconciliationDirection, Source,
};
use crate::Precise;

pub const CHUNK_ROUNDS: usize = 1 << 16;

/// Stream reserved for drawing the estimation subset.
const SUBSET_STREAM: u64 = u64::MAX;

/// What one party recorded in one round.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Record {
    pub x: Option<f64>,
    pub p: Option<f64>,
    /// Measured quadrature, present for homodyne only.
    pub label: Option<Quadrature>,
}

impl Record {
    fn get(&self, q: Quadrature) -> Option<f64> {
        match q {
            Quadrature::X => self.x,
            Quadrature::P => self.p,
        }
    }

    fn keep_only(&self, q: Quadrature) -> Self {
        match q {
            Quadrature::X => Record { p: None, ..*self },
            Quadrature::P => Record { x: None, ..*self },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Round {
    pub alice: Record,
    pub bob: Record,
}

/// Finite record of a protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub protocol: Protocol,
    pub variance: ModulationVariance,
    pub channel: ChannelParams,
    pub seed: u64,
    /// True once mismatched rounds and quadratures have been discarded.
    pub sifted: bool,
    pub rounds: Vec<Round>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Writes the batch as CSV with a header row; absent fields are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "round,alice_x,alice_p,alice_label,bob_x,bob_p,bob_label"
        )?;
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let lab = |q: Option<Quadrature>| q.map(Quadrature::label).unwrap_or("");
        for (i, r) in self.rounds.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{},{},{}",
                num(r.alice.x),
                num(r.alice.p),
                lab(r.alice.label),
                num(r.bob.x),
                num(r.bob.p),
                lab(r.bob.label)
            )?;
        }
        Ok(())
    }
}

/// One recorded number: a quadrature of a mode, possibly through a
/// heterodyne split.
#[derive(Clone, Copy)]
struct Outcome {
    mode: usize,
    quadrature: Quadrature,
    heterodyne: bool,
}

/// Covariance of recorded outcomes: `s_i s_j γ_ij + δ_ij·n_i` with
/// `s = 1/√2` and `n = 1/2` for heterodyne outcomes.
fn outcome_covariance(cm: &CovarianceMatrix<f64>, outcomes: &[Outcome]) -> Matrix<f64> {
    let g = cm.matrix();
    let scale = |o: &Outcome| if o.heterodyne { 0.5f64.sqrt() } else { 1.0 };
    Matrix::from_fn(outcomes.len(), outcomes.len(), |i, j| {
        let (a, b) = (&outcomes[i], &outcomes[j]);
        let mut v =
            scale(a) * scale(b) * g[(a.quadrature.index(a.mode), b.quadrature.index(b.mode))];
        if i == j && a.heterodyne {
            v += 0.5;
        }
        v
    })
}

fn outcomes_for(mode: usize, label: Option<Quadrature>) -> Vec<Outcome> {
    match label {
        Some(q) => vec![Outcome {
            mode,
            quadrature: q,
            heterodyne: false,
        }],
        None => [Quadrature::X, Quadrature::P]
            .map(|q| Outcome {
                mode,
                quadrature: q,
                heterodyne: true,
            })
            .to_vec(),
    }
}

/// Quadrature choices of one round: `None` means heterodyne.
type Config = (Option<Quadrature>, Option<Quadrature>);

fn configs(p: Protocol) -> Vec<Config> {
    let choices = |homodyne: bool| {
        if homodyne {
            vec![Some(Quadrature::X), Some(Quadrature::P)]
        } else {
            vec![None]
        }
    };
    let a = choices(p.source == Source::Squeezed);
    let b = choices(p.bob_measurement == BobMeasurement::Homodyne);
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .collect()
}

struct Sampler {
    config: Config,
    n_alice: usize,
    factor: Matrix<f64>,
}

impl Sampler {
    fn draw<G: Rng>(&self, rng: &mut G) -> Round {
        let dim = self.factor.rows();
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..dim)
            .map(|i| (0..=i).map(|k| self.factor[(i, k)] * z[k]).sum())
            .collect();
        let record = |label: Option<Quadrature>, vals: &[f64]| match label {
            Some(q) => {
                let mut r = Record {
                    label: Some(q),
                    ..Record::default()
                };
                match q {
                    Quadrature::X => r.x = Some(vals[0]),
                    Quadrature::P => r.p = Some(vals[0]),
                }
                r
            }
            None => Record {
                x: Some(vals[0]),
                p: Some(vals[1]),
                label: None,
            },
        };
        Round {
            alice: record(self.config.0, &y[..self.n_alice]),
            bob: record(self.config.1, &y[self.n_alice..]),
        }
    }
}

/// Simulates `n` rounds of `protocol`. Homodyne quadratures are chosen
/// uniformly and independently on each side.
pub fn simulate_protocol(
    protocol: Protocol,
    channel: ChannelParams,
    variance: ModulationVariance,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let cm: CovarianceMatrix<f64> = channel_output_cm(variance, channel);
    let samplers: Vec<Sampler> = configs(protocol)
        .into_iter()
        .map(|config| {
            let alice = outcomes_for(0, config.0);
            let n_alice = alice.len();
            let all: Vec<Outcome> = alice.into_iter().chain(outcomes_for(1, config.1)).collect();
            let cov = outcome_covariance(&cm, &all);
            let factor = cov.cholesky().ok_or(Error::NotPositiveDefinite)?;
            Ok(Sampler {
                config,
                n_alice,
                factor,
            })
        })
        .collect::<Result<_>>()?;
    let chunks = n.div_ceil(CHUNK_ROUNDS);
    let rounds: Vec<Round> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK_ROUNDS.min(n - k * CHUNK_ROUNDS);
            let samplers = &samplers;
            (0..len)
                .map(move |_| {
                    let s = if samplers.len() == 1 {
                        &samplers[0]
                    } else {
                        &samplers[rng.gen_range(0..samplers.len())]
                    };
                    s.draw(&mut rng)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SampleBatch {
        protocol,
        variance,
        channel,
        seed,
        sifted: false,
        rounds,
    })
}

/// Discards rounds whose quadratures do not match and the unmatched half
/// of heterodyne records. Coherent-state/heterodyne batches are returned
/// unchanged.
pub fn sift(batch: &SampleBatch) -> SampleBatch {
    let mut out = batch.clone();
    out.sifted = true;
    if batch.sifted || !batch.protocol.needs_sifting() {
        return out;
    }
    out.rounds = batch
        .rounds
        .iter()
        .filter_map(|r| match (r.alice.label, r.bob.label) {
            (Some(a), Some(b)) => (a == b).then_some(*r),
            (Some(a), None) => Some(Round {
                alice: r.alice,
                bob: r.bob.keep_only(a),
            }),
            (None, Some(b)) => Some(Round {
                alice: r.alice.keep_only(b),
                bob: r.bob,
            }),
            (None, None) => Some(*r),
        })
        .collect();
    out
}

/// Second moments pooled over the `x` and `p` quadratures, with the `p`
/// cross-moment sign-flipped so that both estimate the same correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PooledMoments {
    pub alice_variance: f64,
    pub bob_variance: f64,
    pub cross: f64,
    /// Number of (Alice, Bob) outcome pairs pooled.
    pub count: usize,
}

/// Estimated `γ_AB` and its standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedCovariance {
    /// Not checked for physicality; see [`Self::min_symplectic_eigenvalue`].
    pub cm: CovarianceMatrix<f64>,
    pub standard_errors: Matrix<f64>,
    /// Rounds used for the estimate.
    pub rounds: usize,
    pub moments: PooledMoments,
}

/// Multiplier turning a recorded cross-moment into `γ_AB`'s correlation,
/// undoing the `1/√2` of each heterodyne.
fn cross_factor(p: Protocol) -> f64 {
    let het = |h: bool| if h { 2f64.sqrt() } else { 1.0 };
    het(p.source == Source::Coherent) * het(p.bob_measurement == BobMeasurement::Heterodyne)
}

/// Inverts a recorded variance: homodyne `V`, heterodyne `(V + 1)/2`.
fn unrecord(heterodyne: bool, s2: f64) -> (f64, f64) {
    if heterodyne {
        (2.0 * s2 - 1.0, 2.0)
    } else {
        (s2, 1.0)
    }
}

impl EstimatedCovariance {
    /// Model inversion from pooled moments:
    ///
    /// * homodyne variance `s²` gives `V = s²`; heterodyne gives
    ///   `V = 2s² − 1`;
    /// * the correlation is `κ·s_ab` with `κ = √2` per heterodyne side.
    ///
    /// Standard errors follow normal theory: `s²·√(2/m)` for a variance and
    /// `√((s_a² s_b² + s_ab²)/m)` for a covariance, scaled by the same
    /// affine maps. Entries that are zero by symmetry get `√(γ_ii γ_jj / m)`.
    pub fn from_moments(protocol: Protocol, m: PooledMoments) -> Self {
        let count = m.count as f64;
        let (va, ka) = unrecord(protocol.source == Source::Coherent, m.alice_variance);
        let (vb, kb) = unrecord(
            protocol.bob_measurement == BobMeasurement::Heterodyne,
            m.bob_variance,
        );
        let kc = cross_factor(protocol);
        let c = kc * m.cross;
        let se_a = ka * m.alice_variance * (2.0 / count).sqrt();
        let se_b = kb * m.bob_variance * (2.0 / count).sqrt();
        let se_c = kc * ((m.alice_variance * m.bob_variance + m.cross * m.cross) / count).sqrt();
        let cm = CovarianceMatrix::from_blocks_unchecked(va, vb, c);
        let diag = [va, va, vb, vb];
        let standard_errors = Matrix::from_fn(4, 4, |i, j| match (i, j) {
            _ if i == j => [se_a, se_a, se_b, se_b][i],
            (0, 2) | (2, 0) | (1, 3) | (3, 1) => se_c,
            _ => (diag[i].abs() * diag[j].abs() / count).sqrt(),
        });
        Self {
            cm,
            standard_errors,
            rounds: m.count,
            moments: m,
        }
    }

    /// Smaller symplectic eigenvalue of the standard-form estimate, computed
    /// in closed form so that it is available even for unphysical estimates.
    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        let g = self.cm.matrix();
        let (a, b, c) = (g[(0, 0)], g[(2, 2)], g[(0, 2)]);
        let delta = a * a + b * b - 2.0 * c * c;
        let det = (a * b - c * c) * (a * b - c * c);
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        ((delta - disc) / 2.0).max(0.0).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.cm.matrix()[(0, 0)] > 0.0
            && self.cm.matrix()[(2, 2)] > 0.0
            && self.min_symplectic_eigenvalue() >= 1.0 - PHYSICALITY_TOLERANCE
    }
}

/// Options of [`estimate_covariance_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationOptions {
    /// Fraction of the (sifted) rounds used for estimation, drawn at random
    /// with the batch seed. 1.0 uses every round.
    pub fraction: f64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self { fraction: 1.0 }
    }
}

fn pooled_moments(rounds: &[&Round]) -> Result<PooledMoments> {
    // per-column means, then pooled centred moments
    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [0usize; 2];
    for r in rounds {
        for (k, q) in [Quadrature::X, Quadrature::P].into_iter().enumerate() {
            if let (Some(a), Some(b)) = (r.alice.get(q), r.bob.get(q)) {
                sums[k][0] += a;
                sums[k][1] += b;
                counts[k] += 1;
            }
        }
    }
    let total = counts[0] + counts[1];
    if counts.contains(&1) || total < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: total,
        });
    }
    let means: Vec<[f64; 2]> = (0..2)
        .map(|k| {
            let c = counts[k].max(1) as f64;
            [sums[k][0] / c, sums[k][1] / c]
        })
        .collect();
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for r in rounds {
        for (k, q) in [Quadrature::X, Quadrature::P].into_iter().enumerate() {
            if let (Some(a), Some(b)) = (r.alice.get(q), r.bob.get(q)) {
                let (da, db) = (a - means[k][0], b - means[k][1]);
                saa += da * da;
                sbb += db * db;
                sab += if k == 0 { da * db } else { -da * db };
            }
        }
    }
    let dof = (total - counts.iter().filter(|&&c| c > 0).count()) as f64;
    let m = PooledMoments {
        alice_variance: saa / dof,
        bob_variance: sbb / dof,
        cross: sab / dof,
        count: total,
    };
    if !(m.alice_variance > 0.0) {
        return Err(Error::DegenerateSample {
            what: "Alice's record",
        });
    }
    if !(m.bob_variance > 0.0) {
        return Err(Error::DegenerateSample {
            what: "Bob's record",
        });
    }
    Ok(m)
}

/// Estimates `γ_AB` from all rounds of `batch` (sifting it first if
/// needed).
pub fn estimate_covariance(batch: &SampleBatch) -> Result<EstimatedCovariance> {
    estimate_covariance_with(batch, &EstimationOptions::default())
}

pub fn estimate_covariance_with(
    batch: &SampleBatch,
    options: &EstimationOptions,
) -> Result<EstimatedCovariance> {
    if !(options.fraction > 0.0 && options.fraction <= 1.0) {
        return Err(Error::param(
            "fraction",
            options.fraction,
            "0 < fraction ≤ 1",
        ));
    }
    let sifted;
    let batch = if batch.sifted {
        batch
    } else {
        sifted = sift(batch);
        &sifted
    };
    let n = batch.len();
    let take = ((n as f64) * options.fraction).ceil() as usize;
    let rounds: Vec<&Round> = if take >= n {
        batch.rounds.iter().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(batch.seed);
        rng.set_stream(SUBSET_STREAM);
        let mut idx = sample(&mut rng, n, take).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &batch.rounds[i]).collect()
    };
    let moments = pooled_moments(&rounds)?;
    let mut est = EstimatedCovariance::from_moments(batch.protocol, moments);
    est.rounds = rounds.len();
    Ok(est)
}

/// Key rate evaluated on the estimated `γ_AB`.
pub fn key_rate_from_samples(
    batch: &SampleBatch,
    direction: ReconciliationDirection,
    beta: f64,
) -> Result<KeyRateResult> {
    let est = estimate_covariance(batch)?;
    key_rate_from_estimate(&est, batch, direction, beta)
}

/// Key rate on an estimate obtained from `batch`. Fails with
/// [`Error::UnphysicalEstimate`] when the estimate violates the uncertainty
/// principle beyond the physicality tolerance.
pub fn key_rate_from_estimate(
    est: &EstimatedCovariance,
    batch: &SampleBatch,
    direction: ReconciliationDirection,
    beta: f64,
) -> Result<KeyRateResult> {
    if !est.is_physical() {
        return Err(Error::UnphysicalEstimate {
            nu: est.min_symplectic_eigenvalue(),
            n: est.rounds,
        });
    }
    let cm = est.cm.cast::<Precise>();
    let mut r = key_rate_of_state(
        &cm,
        &ModeLayout::single_pair(),
        batch.protocol,
        direction,
        beta,
    )?;
    r.variance_used = batch.variance.get();
    Ok(r)
}
