//! Complete analysis of hyperentangled Bell states: a spin stage that reads
//! the spatial Bell state into two QDs, then single-photon Bell-state
//! measurements that resolve the polarization Bell state.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use crate::cavity::ReflectionPair;
use crate::error::{Error, Result};
use crate::hilbert::{
    mode, overlap, re, HybridState, Outcome, Polarization, SpinX, INV_SQRT_2, NEGLIGIBLE_PROBABILITY,
};
use crate::optics::{evolve, parse_circuit, Circuit};

use super::bell::{make_bell, photonic_layout, Bell, HyperBellLabel};
use super::hbsg::SpinOutcome;

pub const HBSA_CIRCUIT: &str = include_str!("../../circuits/hbsa.circ");
pub const SPBSM_CIRCUIT: &str = include_str!("../../circuits/spbsm.circ");

pub fn hbsa_circuit() -> &'static Circuit {
    static CIRCUIT: OnceLock<Circuit> = OnceLock::new();
    CIRCUIT.get_or_init(|| parse_circuit(HBSA_CIRCUIT).expect("shipped circuit parses"))
}

pub fn spbsm_circuit() -> &'static Circuit {
    static CIRCUIT: OnceLock<Circuit> = OnceLock::new();
    CIRCUIT.get_or_init(|| parse_circuit(SPBSM_CIRCUIT).expect("shipped circuit parses"))
}

/// Spin readout expected after the spin stage: QD1 carries the spatial
/// parity (`+` for phi-type), QD2 the spatial phase (`+` for a plus sign).
pub fn expected_spins(spatial: Bell) -> SpinOutcome {
    let (x, z) = spatial.bits();
    let sign = |b: bool| if b { SpinX::Minus } else { SpinX::Plus };
    SpinOutcome::new(sign(x), sign(z))
}

/// Inverse of [`expected_spins`].
pub fn spatial_from_spins(spins: SpinOutcome) -> Bell {
    Bell::from_bits(spins.e1 == SpinX::Minus, spins.e2 == SpinX::Minus)
}

#[derive(Clone, Debug)]
pub struct HbsaStage1 {
    /// Full output, spins attached.
    pub state: HybridState,
    /// Error-free component.
    pub clean: HybridState,
    /// `state - clean`: everything that passed a parity gate unflipped.
    pub leaked: HybridState,
}

impl HbsaStage1 {
    pub fn leakage_fraction(&self) -> f64 {
        leakage_between(&self.clean, &self.state)
    }
}

/// Weight of `state` not explained by the error-free reference `clean`:
/// `1 - |<clean|state>|^2 / (|clean|^2 |state|^2)`. One when the reference is
/// empty, zero when `state` is.
pub fn leakage_between(clean: &HybridState, state: &HybridState) -> f64 {
    let total = state.norm_sqr();
    let reference = clean.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    if reference == 0.0 {
        return 1.0;
    }
    let ov = overlap(clean, state).expect("same layout").norm_sqr();
    (1.0 - ov / (reference * total)).clamp(0.0, 1.0)
}

/// Spin-stage output only, spins attached.
pub fn hbsa_stage1_output(input: &HybridState, pair: &ReflectionPair) -> Result<HybridState> {
    let circuit = hbsa_circuit();
    if **input.layout() != *photonic_layout() {
        return Err(Error::config(
            "analysis input must live on the standard two-photon layout",
        ));
    }
    let kets = circuit.spin_kets();
    let with_spins = input.with_spins(&[("QD1", kets[0]), ("QD2", kets[1])])?;
    let mut raw = evolve(circuit, &with_spins, pair)?;
    debug_assert_eq!(raw.len(), 1);
    Ok(raw.remove(0).state)
}

/// Spin stage on a photonic input; both QDs start in the circuit's declared
/// preparation.
pub fn run_hbsa_stage1(input: &HybridState, pair: &ReflectionPair) -> Result<HbsaStage1> {
    let state = hbsa_stage1_output(input, pair)?;
    let clean = hbsa_stage1_output(input, &pair.leak_free())?;
    let leaked = state.sub(&clean)?;
    Ok(HbsaStage1 { state, clean, leaked })
}

/// Which detector fired for each photon. A detector `x1±` corresponds to the
/// single-photon Bell state `phi±_X`, `x2±` to `psi±_X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectorPattern {
    pub a: Bell,
    pub b: Bell,
}

fn port(photon: char, b: Bell) -> String {
    let (x, z) = b.bits();
    format!("{photon}{}{}", if x { 2 } else { 1 }, if z { '-' } else { '+' })
}

fn bell_from_port(label: &str) -> Option<(char, Bell)> {
    let mut it = label.chars();
    let photon = it.next()?;
    let x = match it.next()? {
        '1' => false,
        '2' => true,
        _ => return None,
    };
    let z = match it.next()? {
        '+' => false,
        '-' => true,
        _ => return None,
    };
    it.next().is_none().then_some((photon, Bell::from_bits(x, z)))
}

impl DetectorPattern {
    pub fn all() -> impl Iterator<Item = DetectorPattern> {
        Bell::ALL
            .into_iter()
            .flat_map(|a| Bell::ALL.into_iter().map(move |b| DetectorPattern { a, b }))
    }

    pub fn labels(&self) -> (String, String) {
        (port('a', self.a), port('b', self.b))
    }
}

impl fmt::Display for DetectorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.labels();
        write!(f, "{a}{b}")
    }
}

impl std::str::FromStr for DetectorPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("detector pattern must look like a1+b2-, got `{s}`"));
        if s.len() != 6 || !s.is_ascii() {
            return Err(bad());
        }
        match (bell_from_port(&s[..3]), bell_from_port(&s[3..])) {
            (Some(('a', a)), Some(('b', b))) => Ok(DetectorPattern { a, b }),
            _ => Err(bad()),
        }
    }
}

/// Single-photon Bell state of one photon on its first two paths:
/// `phi± = (R x2 ± L x1)/sqrt2`, `psi± = (R x1 ± L x2)/sqrt2`.
pub fn single_photon_bell(b: Bell) -> Vec<num_complex::Complex64> {
    let (x, z) = b.bits();
    let mut v = vec![re(0.0); 8];
    let (r_path, l_path) = if x { (0, 1) } else { (1, 0) };
    v[mode(Polarization::R, r_path, 4)] = re(INV_SQRT_2);
    v[mode(Polarization::L, l_path, 4)] = re(if z { -INV_SQRT_2 } else { INV_SQRT_2 });
    v
}

/// Run both single-photon Bell-state measurements on a photonic state.
/// Probabilities are relative to the (possibly subnormalized) input.
pub fn run_spbsm(state: &HybridState) -> Result<Vec<(DetectorPattern, f64)>> {
    let mut out: BTreeMap<DetectorPattern, f64> = BTreeMap::new();
    for raw in evolve(spbsm_circuit(), state, &ReflectionPair::ideal())? {
        let p = raw.probability();
        if p <= NEGLIGIBLE_PROBABILITY {
            continue;
        }
        let mut a = None;
        let mut b = None;
        for (label, o) in &raw.record {
            if *o != Outcome::Click {
                continue;
            }
            match bell_from_port(label) {
                Some(('a', bell)) => a = Some(bell),
                Some(('b', bell)) => b = Some(bell),
                _ => {}
            }
        }
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::InconsistentOutcome(format!(
                "branch of probability {p:.3e} without one click per photon"
            )));
        };
        *out.entry(DetectorPattern { a, b }).or_default() += p;
    }
    Ok(out.into_iter().collect())
}

/// `<phi_a phi_b | label>` for every detector pattern, from the basis change
/// between hyperentangled and single-photon Bell states.
fn expansion(label: HyperBellLabel) -> Vec<(DetectorPattern, f64)> {
    let bell = make_bell(label);
    DetectorPattern::all()
        .map(|pat| {
            let proj = HybridState::product(
                photonic_layout(),
                &[single_photon_bell(pat.a), single_photon_bell(pat.b)],
                &[],
            )
            .expect("layout matches");
            (pat, overlap(&proj, &bell).expect("same layout").norm_sqr())
        })
        .collect()
}

/// Detector patterns each hyperentangled input can produce.
pub fn pattern_table() -> &'static BTreeMap<HyperBellLabel, Vec<DetectorPattern>> {
    static TABLE: OnceLock<BTreeMap<HyperBellLabel, Vec<DetectorPattern>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        HyperBellLabel::all()
            .map(|label| {
                let pats = expansion(label)
                    .into_iter()
                    .filter(|(_, p)| *p > 1e-12)
                    .map(|(pat, _)| pat)
                    .collect();
                (label, pats)
            })
            .collect()
    })
}

/// Inputs grouped by the set of detector patterns they share.
pub fn spbsm_groups() -> Vec<(Vec<DetectorPattern>, Vec<HyperBellLabel>)> {
    let mut groups: BTreeMap<Vec<DetectorPattern>, Vec<HyperBellLabel>> = BTreeMap::new();
    for (label, pats) in pattern_table() {
        groups.entry(pats.clone()).or_default().push(*label);
    }
    groups.into_iter().collect()
}

/// Identify the input from the spin readout and the detector pattern.
pub fn classify(spins: SpinOutcome, pattern: DetectorPattern) -> Result<HyperBellLabel> {
    let spatial = spatial_from_spins(spins);
    let mut hits = Bell::ALL
        .into_iter()
        .map(|pol| HyperBellLabel::new(pol, spatial))
        .filter(|l| pattern_table()[l].contains(&pattern));
    match (hits.next(), hits.next()) {
        (Some(l), None) => Ok(l),
        (None, _) => Err(Error::InconsistentOutcome(format!(
            "no input with spatial state {spatial} produces {pattern}"
        ))),
        (Some(a), Some(b)) => Err(Error::InconsistentOutcome(format!(
            "{pattern} is ambiguous between {a} and {b}"
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct HbsaBranch {
    pub spins: SpinOutcome,
    pub pattern: DetectorPattern,
    pub probability: f64,
    pub label: Result<HyperBellLabel>,
}

/// Spin stage, spin readout, both single-photon measurements, classification.
pub fn run_hbsa(input: &HybridState, pair: &ReflectionPair) -> Result<Vec<HbsaBranch>> {
    let stage1 = run_hbsa_stage1(input, pair)?;
    let mut out = Vec::new();
    for spins in SpinOutcome::all() {
        let photonic = stage1.state.project_spins(&spins.kets())?;
        if photonic.norm_sqr() <= NEGLIGIBLE_PROBABILITY {
            continue;
        }
        for (pattern, probability) in run_spbsm(&photonic)? {
            out.push(HbsaBranch {
                spins,
                pattern,
                probability,
                label: classify(spins, pattern),
            });
        }
    }
    Ok(out)
}
