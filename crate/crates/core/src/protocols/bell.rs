//! Two-photon Bell states in polarization and spatial mode, and the
//! single-qubit corrections that move between them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_single_photon_op, mode, overlap, re, HybridState, Layout, PhotonModes, Polarization, INV_SQRT_2,
    PROBABILITY_TOL,
};
use crate::optics::{path_swap, polarization_bit_flip, polarization_phase_flip, scale_op};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus];

    /// `(x, z)`: the state is `|0,x> + (-1)^z |1,1^x>` up to normalization.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Bell::PhiPlus => (false, false),
            Bell::PhiMinus => (false, true),
            Bell::PsiPlus => (true, false),
            Bell::PsiMinus => (true, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Bell::PhiPlus,
            (false, true) => Bell::PhiMinus,
            (true, false) => Bell::PsiPlus,
            (true, true) => Bell::PsiMinus,
        }
    }

    /// Amplitude of `|i, j>`.
    pub fn amplitude(self, i: usize, j: usize) -> f64 {
        let (x, z) = self.bits();
        let x = x as usize;
        if j != i ^ x {
            0.0
        } else if i == 1 && z {
            -INV_SQRT_2
        } else {
            INV_SQRT_2
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Bell::PhiPlus => "phi+",
            Bell::PhiMinus => "phi-",
            Bell::PsiPlus => "psi+",
            Bell::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for Bell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Bell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bell::ALL
            .into_iter()
            .find(|b| b.symbol() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown Bell label `{s}` (expected phi+, phi-, psi+ or psi-)")))
    }
}

/// A hyperentangled Bell state: one Bell label per degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyperBellLabel {
    pub pol: Bell,
    pub spatial: Bell,
}

impl HyperBellLabel {
    pub fn new(pol: Bell, spatial: Bell) -> Self {
        HyperBellLabel { pol, spatial }
    }

    /// All 16 labels, spatial-major.
    pub fn all() -> impl Iterator<Item = HyperBellLabel> {
        Bell::ALL
            .into_iter()
            .flat_map(|spatial| Bell::ALL.into_iter().map(move |pol| HyperBellLabel { pol, spatial }))
    }
}

impl fmt::Display for HyperBellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pol, self.spatial)
    }
}

impl FromStr for HyperBellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once(',')
            .ok_or_else(|| Error::config(format!("expected <pol>,<spatial>, got `{s}`")))?;
        Ok(HyperBellLabel::new(p.parse()?, q.parse()?))
    }
}

/// The two path pairs carrying the spatial qubit of photons A and B.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BellFrame {
    pub a: [&'static str; 2],
    pub b: [&'static str; 2],
}

impl BellFrame {
    /// Input ports, where analysis starts.
    pub const INPUT: BellFrame = BellFrame {
        a: ["a1", "a2"],
        b: ["b1", "b2"],
    };
    /// Beam-splitter outputs, where generation ends.
    pub const OUTPUT: BellFrame = BellFrame {
        a: ["c1", "c2"],
        b: ["d1", "d2"],
    };
}

pub fn photon_modes() -> Vec<PhotonModes> {
    vec![
        PhotonModes::new("A", &["a1", "a2", "c1", "c2"]),
        PhotonModes::new("B", &["b1", "b2", "d1", "d2"]),
    ]
}

/// Both photons, no spins.
pub fn photonic_layout() -> Arc<Layout> {
    Layout::new(photon_modes(), vec![]).expect("static layout")
}

/// Both photons and both QDs.
pub fn protocol_layout() -> Arc<Layout> {
    Layout::new(photon_modes(), vec!["QD1".into(), "QD2".into()]).expect("static layout")
}

/// Normalized hyperentangled state on the standard photonic layout.
pub fn make_bell(label: HyperBellLabel) -> HybridState {
    make_bell_in(label, BellFrame::INPUT)
}

pub fn make_bell_in(label: HyperBellLabel, frame: BellFrame) -> HybridState {
    let layout = photonic_layout();
    let pa = frame.a.map(|p| layout.path_index(0, p).expect("frame path"));
    let pb = frame.b.map(|p| layout.path_index(1, p).expect("frame path"));
    let n = 4;
    let mut amps = vec![C64::default(); layout.dim()];
    let pols = Polarization::ALL;
    for (ia, ib, sa, sb) in (0..16).map(|k| (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1)) {
        let a = label.pol.amplitude(ia, ib) * label.spatial.amplitude(sa, sb);
        if a == 0.0 {
            continue;
        }
        let ma = mode(pols[ia], pa[sa], n);
        let mb = mode(pols[ib], pb[sb], n);
        amps[ma * 2 * n + mb] += re(a);
    }
    HybridState::from_amplitudes(layout, amps).expect("dimension matches")
}

/// Map `make_bell(from)` to `make_bell(to)` (up to global phase) with
/// operations on photon A only.
pub fn apply_local_correction(state: &HybridState, from: HyperBellLabel, to: HyperBellLabel) -> Result<HybridState> {
    apply_local_correction_in(state, BellFrame::INPUT, from, to)
}

pub fn apply_local_correction_in(
    state: &HybridState,
    frame: BellFrame,
    from: HyperBellLabel,
    to: HyperBellLabel,
) -> Result<HybridState> {
    let expected = make_bell_in(from, frame);
    let norm = state.norm_sqr();
    let f = if norm > 0.0 {
        overlap(&expected, state)?.norm_sqr() / norm
    } else {
        0.0
    };
    if (f - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::Precondition(format!("state is not {from} (fidelity {f:.12})")));
    }
    if from == to {
        return Ok(state.clone());
    }
    let layout = state.layout();
    let ph = layout.photon_index("A")?;
    let n = layout.num_paths(ph)?;
    let p1 = layout.path_index(ph, frame.a[0])?;
    let p2 = layout.path_index(ph, frame.a[1])?;

    let (fx, fz) = from.pol.bits();
    let (tx, tz) = to.pol.bits();
    let mut out = state.clone();
    if fz != tz {
        out = apply_single_photon_op(&out, ph, &polarization_phase_flip(n))?;
    }
    if fx != tx {
        out = apply_single_photon_op(&out, ph, &polarization_bit_flip(n))?;
    }
    let (fx, fz) = from.spatial.bits();
    let (tx, tz) = to.spatial.bits();
    if fz != tz {
        out = apply_single_photon_op(&out, ph, &scale_op(n, p2, re(-1.0)))?;
    }
    if fx != tx {
        out = apply_single_photon_op(&out, ph, &path_swap(n, p1, p2)?)?;
    }
    Ok(out)
}
