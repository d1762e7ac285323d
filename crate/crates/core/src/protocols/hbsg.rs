//! Heralded generation of hyperentangled Bell states.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::cavity::ReflectionPair;
use crate::error::Result;
use crate::hilbert::{overlap, HybridState, LinearPolarization, Outcome, SpinX};
use crate::optics::{evolve, parse_circuit, Circuit, Element};

use super::bell::{make_bell_in, Bell, BellFrame, HyperBellLabel};

pub const HBSG_CIRCUIT: &str = include_str!("../../circuits/hbsg.circ");

pub fn hbsg_circuit() -> &'static Circuit {
    static CIRCUIT: OnceLock<Circuit> = OnceLock::new();
    CIRCUIT.get_or_init(|| parse_circuit(HBSG_CIRCUIT).expect("shipped circuit parses"))
}

/// Spin readouts of QD1 and QD2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOutcome {
    pub e1: SpinX,
    pub e2: SpinX,
}

impl SpinOutcome {
    pub fn new(e1: SpinX, e2: SpinX) -> Self {
        SpinOutcome { e1, e2 }
    }

    pub fn all() -> impl Iterator<Item = SpinOutcome> {
        SpinX::ALL
            .into_iter()
            .flat_map(|e1| SpinX::ALL.into_iter().map(move |e2| SpinOutcome { e1, e2 }))
    }

    pub fn kets(self) -> [[C64; 2]; 2] {
        [self.e1.ket(), self.e2.ket()]
    }
}

impl fmt::Display for SpinOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi{}_1 phi{}_2", self.e1, self.e2)
    }
}

/// The state generated for each spin outcome when no block heralds, on the
/// beam-splitter output ports.
pub fn hbsg_target(spins: SpinOutcome) -> HyperBellLabel {
    use Bell::*;
    let (pol, spatial) = match (spins.e1, spins.e2) {
        (SpinX::Plus, SpinX::Plus) => (PhiPlus, PhiPlus),
        (SpinX::Plus, SpinX::Minus) => (PhiMinus, PsiPlus),
        (SpinX::Minus, SpinX::Plus) => (PsiPlus, PhiMinus),
        (SpinX::Minus, SpinX::Minus) => (PsiMinus, PsiMinus),
    };
    HyperBellLabel::new(pol, spatial)
}

/// Single-photon input for the generator: H on the first path.
pub fn hbsg_input() -> Result<HybridState> {
    let circuit = hbsg_circuit();
    let h = LinearPolarization::H.ket();
    let photon = vec![
        h[0],
        C64::default(),
        C64::default(),
        C64::default(),
        h[1],
        C64::default(),
        C64::default(),
        C64::default(),
    ];
    circuit.input_state(&[photon.clone(), photon])
}

#[derive(Clone, Debug)]
pub struct HbsgBranch {
    pub spins: SpinOutcome,
    pub herald_a: bool,
    pub herald_b: bool,
    pub probability: f64,
    /// Normalized photonic state left after the spin readout.
    pub state: HybridState,
}

impl HbsgBranch {
    pub fn heralded(&self) -> bool {
        self.herald_a || self.herald_b
    }
}

#[derive(Clone, Debug)]
pub struct HbsgRun {
    pub pair: ReflectionPair,
    /// Branches of non-negligible probability.
    pub branches: Vec<HbsgBranch>,
    /// Error-free component of each unheralded branch, unnormalized and
    /// photonic.
    pub clean: Vec<(SpinOutcome, HybridState)>,
}

impl HbsgRun {
    pub fn herald_rate(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.heralded())
            .map(|b| b.probability)
            .sum()
    }

    /// Total weight of the error-free output.
    pub fn success_probability(&self) -> f64 {
        self.clean.iter().map(|(_, s)| s.norm_sqr()).sum()
    }

    /// Smallest fidelity of a normalized error-free branch against its
    /// target. `None` when every error-free branch is empty.
    pub fn conditional_fidelity(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (spins, state) in &self.clean {
            let w = state.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let target = make_bell_in(hbsg_target(*spins), BellFrame::OUTPUT);
            let f = overlap(&target, state).expect("same layout").norm_sqr() / w;
            worst = Some(worst.map_or(f, |x| x.min(f)));
        }
        worst
    }

    /// Unheralded branches.
    pub fn successes(&self) -> impl Iterator<Item = &HbsgBranch> {
        self.branches.iter().filter(|b| !b.heralded())
    }
}

fn spin_outcome(record: &[(String, Outcome)]) -> Option<SpinOutcome> {
    let get = |qd: &str| {
        record.iter().find_map(|(l, o)| match o {
            Outcome::Spin(s) if l == qd => Some(*s),
            _ => None,
        })
    };
    Some(SpinOutcome::new(get("QD1")?, get("QD2")?))
}

fn clicked(record: &[(String, Outcome)], label: &str) -> bool {
    record.iter().any(|(l, o)| l == label && *o == Outcome::Click)
}

fn photonic(state: &HybridState, spins: SpinOutcome) -> Result<HybridState> {
    state.project_spins(&spins.kets())
}

/// Run the generator with the given reflection coefficients.
pub fn run_hbsg(pair: &ReflectionPair) -> Result<HbsgRun> {
    let circuit = hbsg_circuit();
    let input = hbsg_input()?;
    let mut branches = Vec::new();
    for raw in evolve(circuit, &input, pair)? {
        let p = raw.probability();
        if p <= crate::hilbert::NEGLIGIBLE_PROBABILITY {
            continue;
        }
        let spins = spin_outcome(&raw.record).expect("both spins are read out");
        branches.push(HbsgBranch {
            spins,
            herald_a: clicked(&raw.record, "hA"),
            herald_b: clicked(&raw.record, "hB"),
            probability: p,
            state: photonic(&raw.state, spins)?.normalized()?,
        });
    }
    let mut clean = Vec::new();
    for raw in evolve(circuit, &input, &pair.leak_free())? {
        if clicked(&raw.record, "hA") || clicked(&raw.record, "hB") {
            continue;
        }
        let spins = spin_outcome(&raw.record).expect("both spins are read out");
        clean.push((spins, photonic(&raw.state, spins)?));
    }
    clean.sort_by_key(|(s, _)| *s);
    Ok(HbsgRun {
        pair: *pair,
        branches,
        clean,
    })
}

/// Unheralded state just before the beam splitters, spins still attached.
pub fn hbsg_pre_bs_state(pair: &ReflectionPair) -> Result<HybridState> {
    let full = hbsg_circuit();
    let cut = full
        .ops
        .iter()
        .position(|e| matches!(e, Element::Bs { .. }))
        .expect("generator has a beam splitter");
    let truncated = Circuit::new(full.qds.clone(), full.photons.clone(), full.ops[..cut].to_vec())?;
    let input = hbsg_input()?;
    let raw = evolve(&truncated, &input, pair)?;
    let silent = raw
        .into_iter()
        .find(|b| !clicked(&b.record, "hA") && !clicked(&b.record, "hB"))
        .expect("an unheralded branch always exists");
    Ok(silent.state)
}
