//! Entanglement-based model of the four Gaussian protocols.
//!
//! Alice holds mode `A` of a two-mode squeezed vacuum and sends mode `B`
//! through a lossy, noisy Gaussian channel. Her measurement on `A` is
//! homodyne for a squeezed-state source and heterodyne for a coherent-state
//! source; Bob homodynes or heterodynes `B`.
//!
//! # Key variables and sifting
//!
//! Unless both parties heterodyne, only rounds in which the two quadratures
//! match are kept, and the key variable on each side is a single real
//! number: the matched quadrature. Homodyne is fixed to `x` (the `p` rounds
//! give identical rates). A heterodyne used in a sifted protocol is a
//! balanced beam splitter with vacuum followed by an `x` homodyne on one
//! output; the other output ("port") stays unmeasured, since the `p` half of
//! that record is discarded. When both parties heterodyne, both halves are
//! kept and the record is two-dimensional. See [`Readout`].
//!
//! # Holevo bounds
//!
//! Eve holds the purification of `γ_AB`. Adding vacuum modes and applying
//! passive unitaries keeps the joint state pure, and a homodyne outcome on a
//! pure Gaussian state leaves the rest pure, so
//! `S(E | x) = S(rest | x)` where `rest` is everything the measuring party
//! does not measure: the other party's modes plus any unmeasured ports.
//! Therefore
//!
//! `χ(x : E) = S(γ_AB) − S(rest | x)`,
//!
//! which needs only `γ_AB`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gaussian::{
    condition_on_quadratures, von_neumann_entropy, CovarianceMatrix, MeasurementKind, Quadrature,
};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Squeezed,
    Coherent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BobMeasurement {
    Homodyne,
    Heterodyne,
}

/// One of the four Gaussian protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Protocol {
    pub source: Source,
    pub bob_measurement: BobMeasurement,
}

impl Protocol {
    pub const SQUEEZED_HOMODYNE: Self = Self::new(Source::Squeezed, BobMeasurement::Homodyne);
    pub const SQUEEZED_HETERODYNE: Self = Self::new(Source::Squeezed, BobMeasurement::Heterodyne);
    pub const COHERENT_HOMODYNE: Self = Self::new(Source::Coherent, BobMeasurement::Homodyne);
    pub const COHERENT_HETERODYNE: Self = Self::new(Source::Coherent, BobMeasurement::Heterodyne);

    /// All four protocols in canonical order.
    pub const ALL: [Self; 4] = [
        Self::SQUEEZED_HOMODYNE,
        Self::SQUEEZED_HETERODYNE,
        Self::COHERENT_HOMODYNE,
        Self::COHERENT_HETERODYNE,
    ];

    pub const fn new(source: Source, bob_measurement: BobMeasurement) -> Self {
        Self {
            source,
            bob_measurement,
        }
    }

    pub fn name(self) -> &'static str {
        match (self.source, self.bob_measurement) {
            (Source::Squeezed, BobMeasurement::Homodyne) => "squeezed-homodyne",
            (Source::Squeezed, BobMeasurement::Heterodyne) => "squeezed-heterodyne",
            (Source::Coherent, BobMeasurement::Homodyne) => "coherent-homodyne",
            (Source::Coherent, BobMeasurement::Heterodyne) => "coherent-heterodyne",
        }
    }

    /// Alice's measurement in the entanglement-based picture: homodyne for
    /// squeezed states, heterodyne for coherent states.
    pub fn alice_measurement(self) -> MeasurementKind {
        match self.source {
            Source::Squeezed => MeasurementKind::HomodyneX,
            Source::Coherent => MeasurementKind::Heterodyne,
        }
    }

    pub fn bob_measurement_kind(self) -> MeasurementKind {
        match self.bob_measurement {
            BobMeasurement::Homodyne => MeasurementKind::HomodyneX,
            BobMeasurement::Heterodyne => MeasurementKind::Heterodyne,
        }
    }

    /// Whether rounds with mismatched quadratures are discarded.
    pub fn needs_sifting(self) -> bool {
        !(self.source == Source::Coherent && self.bob_measurement == BobMeasurement::Heterodyne)
    }

    pub fn alice_readout(self) -> Readout {
        Readout::for_measurement(self.alice_measurement(), self.needs_sifting())
    }

    pub fn bob_readout(self) -> Readout {
        Readout::for_measurement(self.bob_measurement_kind(), self.needs_sifting())
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown protocol '{s}' (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// What one party extracts from each of its modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Readout {
    /// One quadrature.
    Homodyne(Quadrature),
    /// Both quadratures through a balanced split with vacuum.
    Heterodyne,
    /// Heterodyne of which only one quadrature survives sifting.
    SiftedHeterodyne(Quadrature),
}

impl Readout {
    fn for_measurement(kind: MeasurementKind, sifted: bool) -> Self {
        match kind {
            MeasurementKind::HomodyneX => Readout::Homodyne(Quadrature::X),
            MeasurementKind::HomodyneP => Readout::Homodyne(Quadrature::P),
            MeasurementKind::Heterodyne if sifted => Readout::SiftedHeterodyne(Quadrature::X),
            MeasurementKind::Heterodyne => Readout::Heterodyne,
        }
    }

    /// Real numbers recorded per mode.
    pub fn outcomes_per_mode(self) -> usize {
        match self {
            Readout::Heterodyne => 2,
            _ => 1,
        }
    }

    fn uses_split(self) -> bool {
        !matches!(self, Readout::Homodyne(_))
    }
}

/// Gaussian channel: transmittance `T ∈ (0, 1]` and excess noise `ε ≥ 0`
/// referred to the channel input, in shot-noise units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    transmittance: f64,
    excess_noise: f64,
}

impl ChannelParams {
    pub fn new(transmittance: f64, excess_noise: f64) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::param("T", transmittance, "0 < T ≤ 1"));
        }
        if !(excess_noise >= 0.0 && excess_noise.is_finite()) {
            return Err(Error::param("ε", excess_noise, "finite and ε ≥ 0"));
        }
        Ok(Self {
            transmittance,
            excess_noise,
        })
    }

    pub fn transmittance(self) -> f64 {
        self.transmittance
    }

    pub fn excess_noise(self) -> f64 {
        self.excess_noise
    }
}

/// Quadrature variance `V ≥ 1` of Alice's half of the EPR state.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ModulationVariance(f64);

impl ModulationVariance {
    pub fn new(v: f64) -> Result<Self> {
        if !(v >= 1.0 && v.is_finite()) {
            return Err(Error::param("V", v, "finite and V ≥ 1"));
        }
        Ok(Self(v))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReconciliationDirection {
    /// Bob corrects toward Alice; the key is Alice's data.
    Direct,
    /// Alice corrects toward Bob; the key is Bob's data.
    Reverse,
}

impl ReconciliationDirection {
    pub const ALL: [Self; 2] = [Self::Direct, Self::Reverse];

    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "dr",
            Self::Reverse => "rr",
        }
    }

    /// The party whose data becomes the key.
    pub fn reference(self) -> Party {
        match self {
            Self::Direct => Party::Alice,
            Self::Reverse => Party::Bob,
        }
    }
}

impl fmt::Display for ReconciliationDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReconciliationDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dr" | "direct" => Ok(Self::Direct),
            "rr" | "reverse" => Ok(Self::Reverse),
            _ => Err(format!("unknown direction '{s}' (expected dr or rr)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

/// Which modes of a covariance matrix belong to Alice and which to Bob.
///
/// Every mode must belong to exactly one of them: Eve is the purification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeLayout {
    alice: Vec<usize>,
    bob: Vec<usize>,
}

impl ModeLayout {
    pub fn new(alice: Vec<usize>, bob: Vec<usize>) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::EmptyModeSet);
        }
        let n = alice.len() + bob.len();
        let mut seen = vec![false; n];
        for &m in alice.iter().chain(&bob) {
            if m >= n {
                return Err(Error::ModeOutOfRange {
                    index: m,
                    n_modes: n,
                });
            }
            if seen[m] {
                return Err(Error::DuplicateMode { index: m });
            }
            seen[m] = true;
        }
        Ok(Self { alice, bob })
    }

    /// Alice on mode 0, Bob on mode 1.
    pub fn single_pair() -> Self {
        Self {
            alice: vec![0],
            bob: vec![1],
        }
    }

    /// `pairs` copies ordered `A1, B1, A2, B2, …`.
    pub fn interleaved_pairs(pairs: usize) -> Self {
        Self {
            alice: (0..pairs).map(|k| 2 * k).collect(),
            bob: (0..pairs).map(|k| 2 * k + 1).collect(),
        }
    }

    pub fn alice(&self) -> &[usize] {
        &self.alice
    }

    pub fn bob(&self) -> &[usize] {
        &self.bob
    }

    pub fn modes(&self, party: Party) -> &[usize] {
        match party {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    /// The same modes with the roles of Alice and Bob exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alice: self.bob.clone(),
            bob: self.alice.clone(),
        }
    }

    fn check(&self, cm_modes: usize) -> Result<()> {
        if cm_modes != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: cm_modes,
            });
        }
        Ok(())
    }
}

/// Information quantities entering a key rate, in bits per retained symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InformationBudget<R> {
    /// Shannon information between the two key variables.
    pub mutual_information: R,
    /// Holevo bound on Eve's information about the reference variable.
    pub eve_holevo: R,
    /// Holevo bound on what Bob's quantum system holds about Alice's
    /// variable, when requested.
    pub bob_holevo: Option<R>,
}

/// `γ_AB` after the channel: `[[V·I, c·Z], [c·Z, b·I]]` with
/// `c = √(T(V² − 1))` and `b = T(V − 1 + ε) + 1`.
pub fn channel_output_cm<R: Real>(
    variance: ModulationVariance,
    channel: ChannelParams,
) -> CovarianceMatrix<R> {
    let v = R::lit(variance.get());
    let t = R::lit(channel.transmittance());
    let eps = R::lit(channel.excess_noise());
    let one = R::one();
    let corr = (t * (v - one) * (v + one)).sqrt();
    let bob = t * (v - one + eps) + one;
    CovarianceMatrix::from_blocks_unchecked(v, bob, corr)
}

/// A covariance matrix prepared for reading out one party's modes.
struct Prepared<R> {
    cm: CovarianceMatrix<R>,
    /// Rows of the recorded quadratures.
    quadratures: Vec<usize>,
    /// Split outputs that are not recorded.
    ports: Vec<usize>,
}

/// Adds a vacuum mode per split mode and mixes them on balanced beam
/// splitters; records the readout quadratures.
fn prepare<R: Real>(cm: &CovarianceMatrix<R>, modes: &[usize], readout: Readout) -> Prepared<R> {
    if !readout.uses_split() {
        let q = match readout {
            Readout::Homodyne(q) => q,
            _ => unreachable!(),
        };
        return Prepared {
            cm: cm.clone(),
            quadratures: modes.iter().map(|&m| q.index(m)).collect(),
            ports: Vec::new(),
        };
    }
    let n = cm.n_modes();
    let mut g = cm.with_vacuum_modes(modes.len()).into_matrix();
    let mut quadratures = Vec::new();
    let mut ports = Vec::new();
    for (k, &m) in modes.iter().enumerate() {
        let port = n + k;
        balanced_split(&mut g, m, port);
        match readout {
            Readout::Heterodyne => {
                quadratures.push(Quadrature::X.index(m));
                quadratures.push(Quadrature::P.index(port));
            }
            Readout::SiftedHeterodyne(q) => {
                quadratures.push(q.index(m));
                ports.push(port);
            }
            Readout::Homodyne(_) => unreachable!(),
        }
    }
    Prepared {
        cm: CovarianceMatrix::from_matrix_unchecked(g),
        quadratures,
        ports,
    }
}

/// In-place congruence by a 50:50 beam splitter on modes `i`, `j`.
fn balanced_split<R: Real>(g: &mut Matrix<R>, i: usize, j: usize) {
    let r = R::lit(0.5).sqrt();
    let dim = g.rows();
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        for c in 0..dim {
            let (x, y) = (g[(a, c)], g[(b, c)]);
            g[(a, c)] = r * (x + y);
            g[(b, c)] = r * (y - x);
        }
        for row in 0..dim {
            let (x, y) = (g[(row, a)], g[(row, b)]);
            g[(row, a)] = r * (x + y);
            g[(row, b)] = r * (y - x);
        }
    }
}

fn log2_det<R: Real>(m: &Matrix<R>) -> Result<R> {
    let ln = m
        .ln_det_spd()
        .ok_or(Error::NonPositiveConditionalVariance)?;
    Ok(ln / R::lit(2.0).ln())
}

/// The protocol's key-variable readouts, as `(alice, bob)`.
fn readouts(p: Protocol) -> (Readout, Readout) {
    (p.alice_readout(), p.bob_readout())
}

/// Shannon mutual information between the recorded outcomes of two
/// readouts, `½·log₂(det Σa · det Σb / det Σab)`.
pub fn mutual_information_with<R: Real>(
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
    alice: Readout,
    bob: Readout,
) -> Result<R> {
    layout.check(cm.n_modes())?;
    let a = prepare(cm, layout.alice(), alice);
    let b = prepare(&a.cm, layout.bob(), bob);
    let g = b.cm.matrix();
    let joint: Vec<usize> = a
        .quadratures
        .iter()
        .chain(&b.quadratures)
        .copied()
        .collect();
    let ia = log2_det(&g.select(&a.quadratures, &a.quadratures))?;
    let ib = log2_det(&g.select(&b.quadratures, &b.quadratures))?;
    let iab = log2_det(&g.select(&joint, &joint))?;
    let mi = (ia + ib - iab) * R::lit(0.5);
    // exact zero when uncorrelated; tiny negative values are roundoff
    Ok(mi.max(R::zero()))
}

/// Entropy of `keep` (plus unrecorded ports when `with_ports`) conditioned
/// on `party`'s readout.
fn conditional_entropy<R: Real>(
    cm: &CovarianceMatrix<R>,
    measured: &[usize],
    readout: Readout,
    keep: &[usize],
    with_ports: bool,
) -> Result<R> {
    let prep = prepare(cm, measured, readout);
    let mut rest = keep.to_vec();
    if with_ports {
        rest.extend_from_slice(&prep.ports);
    }
    let cond = condition_on_quadratures(&prep.cm, &prep.quadratures, &rest)?;
    von_neumann_entropy(&cond)
}

/// Holevo bound on Eve's information about `conditioner`'s recorded
/// variable: `S(γ) − S(rest | x)`.
pub fn holevo_bound_with<R: Real>(
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
    conditioner: Party,
    readout: Readout,
) -> Result<R> {
    layout.check(cm.n_modes())?;
    let other = match conditioner {
        Party::Alice => Party::Bob,
        Party::Bob => Party::Alice,
    };
    let total = von_neumann_entropy(cm)?;
    let cond = conditional_entropy(
        cm,
        layout.modes(conditioner),
        readout,
        layout.modes(other),
        true,
    )?;
    Ok((total - cond).max(R::zero()))
}

/// Holevo information `S(γ_B) − S(γ_B | a)` between Alice's recorded
/// variable and Bob's modes.
pub fn bob_holevo_with<R: Real>(
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
    alice: Readout,
) -> Result<R> {
    layout.check(cm.n_modes())?;
    let reduced = cm.partial_trace(layout.bob())?;
    let before = von_neumann_entropy(&reduced)?;
    let after = conditional_entropy(cm, layout.alice(), alice, layout.bob(), false)?;
    Ok((before - after).max(R::zero()))
}

/// Mutual information and Eve's bound for `protocol` on `cm` with the given
/// mode assignment. With several pairs each party applies the same readout
/// to all of its modes and the outcomes are treated jointly.
pub fn information_budget_in<R: Real>(
    protocol: Protocol,
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
    direction: ReconciliationDirection,
) -> Result<InformationBudget<R>> {
    let (ra, rb) = readouts(protocol);
    let reference = direction.reference();
    let readout = match reference {
        Party::Alice => ra,
        Party::Bob => rb,
    };
    Ok(InformationBudget {
        mutual_information: mutual_information_with(cm, layout, ra, rb)?,
        eve_holevo: holevo_bound_with(cm, layout, reference, readout)?,
        bob_holevo: None,
    })
}

/// [`information_budget_in`] for a single pair, also filling in
/// `bob_holevo`.
pub fn information_budget<R: Real>(
    protocol: Protocol,
    cm: &CovarianceMatrix<R>,
    direction: ReconciliationDirection,
) -> Result<InformationBudget<R>> {
    let layout = ModeLayout::single_pair();
    let mut budget = information_budget_in(protocol, cm, &layout, direction)?;
    budget.bob_holevo = Some(bob_holevo_with(cm, &layout, protocol.alice_readout())?);
    Ok(budget)
}

/// `I_ab` for a two-mode `γ_AB` (Alice mode 0, Bob mode 1).
pub fn mutual_information<R: Real>(protocol: Protocol, cm: &CovarianceMatrix<R>) -> Result<R> {
    let (ra, rb) = readouts(protocol);
    mutual_information_with(cm, &ModeLayout::single_pair(), ra, rb)
}

/// Eve's Holevo bound on Alice's (`χ_aE`) or Bob's (`χ_bE`) variable for a
/// two-mode `γ_AB`.
pub fn holevo_bound<R: Real>(
    protocol: Protocol,
    cm: &CovarianceMatrix<R>,
    conditioner: Party,
) -> Result<R> {
    let readout = match conditioner {
        Party::Alice => protocol.alice_readout(),
        Party::Bob => protocol.bob_readout(),
    };
    holevo_bound_with(cm, &ModeLayout::single_pair(), conditioner, readout)
}

/// `χ_aB` for a two-mode `γ_AB`.
pub fn bob_holevo<R: Real>(protocol: Protocol, cm: &CovarianceMatrix<R>) -> Result<R> {
    bob_holevo_with(cm, &ModeLayout::single_pair(), protocol.alice_readout())
}

/// Reverse-reconciliation budget computed as a direct-reconciliation budget
/// with the roles of Alice and Bob exchanged.
pub fn reverse_budget_by_role_swap<R: Real>(
    protocol: Protocol,
    cm: &CovarianceMatrix<R>,
    layout: &ModeLayout,
) -> Result<InformationBudget<R>> {
    let (ra, rb) = readouts(protocol);
    let swapped = layout.swapped();
    Ok(InformationBudget {
        mutual_information: mutual_information_with(cm, &swapped, rb, ra)?,
        eve_holevo: holevo_bound_with(cm, &swapped, Party::Alice, rb)?,
        bob_holevo: None,
    })
}

/// Pure four-mode state `(A, B, E1, E2)` of an entangling-cloner attack that
/// produces `channel_output_cm` on `(A, B)`.
///
/// Eve keeps one half (`E2`) of a two-mode squeezed vacuum of variance
/// `W = 1 + Tε/(1 − T)` and mixes the other half (`E1`) with `B` on a beam
/// splitter of transmittance `T`. Requires `T < 1`.
pub fn entangling_cloner_cm<R: Real>(
    variance: ModulationVariance,
    channel: ChannelParams,
) -> Result<CovarianceMatrix<R>> {
    let t = channel.transmittance();
    if !(t < 1.0) {
        return Err(Error::param("T", t, "T < 1 for an explicit cloner"));
    }
    let one = R::one();
    let tr = R::lit(t);
    let w = one + tr * R::lit(channel.excess_noise()) / (one - tr);
    let source = crate::gaussian::two_mode_squeezed_cm(R::lit(variance.get()))?;
    let eve = crate::gaussian::two_mode_squeezed_cm(w)?;
    let joint = source.tensor(&eve);
    let bs = crate::gaussian::beam_splitter_symplectic(tr, (1, 2), 4)?;
    joint.apply_symplectic(&bs)
}

/// Eve's Holevo bound computed directly on her modes of an explicit
/// purification `cm` whose first two modes are `(A, B)`:
/// `S(E) − S(E | x)`.
pub fn eve_holevo_on_purification<R: Real>(
    protocol: Protocol,
    cm: &CovarianceMatrix<R>,
    conditioner: Party,
) -> Result<R> {
    let eve: Vec<usize> = (2..cm.n_modes()).collect();
    let (mode, readout) = match conditioner {
        Party::Alice => (0, protocol.alice_readout()),
        Party::Bob => (1, protocol.bob_readout()),
    };
    let before = von_neumann_entropy(&cm.partial_trace(&eve)?)?;
    let after = conditional_entropy(cm, &[mode], readout, &eve, false)?;
    Ok(before - after)
}
