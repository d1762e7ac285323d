//! The error-heralded QD block and its parity-gate variant.
//!
//! Both share the arm `Hp -> QD reflection -> Hp` on one path. Per photon
//! passage the arm produces a success component `s = (r_o - r_h)/2` with the
//! polarization flipped and the spin X-flipped, plus a leak component
//! `l = (r_o + r_h)/2` with polarization and spin untouched.
//!
//! * Heralded mode expects pure `L` on the path. A polarization-resolving
//!   detector watching for `L` afterwards catches the leak component; the
//!   success component leaves as `R`.
//! * Parity-gate mode adds a `Z` plate after the arm so the success
//!   component keeps its input polarization. The leak component stays in the
//!   state with flipped polarization.

use crate::cavity::{reflection_operator, ReflectionPair};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_single_photon_op, apply_spin_conditional_op, apply_spin_op, measure, mode, re, BranchOutcome, HybridState,
    Observable, PhotonOp, PolFilter, Polarization, AMPLITUDE_TOL,
};
use crate::optics::{apply_hp, apply_z, Element};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMode {
    Heralded,
    ParityGate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockConfig {
    pub qd: String,
    pub pair: ReflectionPair,
    pub mode: BlockMode,
    /// Detector label for the herald; heralded mode only.
    pub herald_label: Option<String>,
}

impl BlockConfig {
    pub fn heralded(qd: &str, pair: ReflectionPair, label: &str) -> Self {
        BlockConfig {
            qd: qd.into(),
            pair,
            mode: BlockMode::Heralded,
            herald_label: Some(label.into()),
        }
    }

    pub fn parity(qd: &str, pair: ReflectionPair) -> Self {
        BlockConfig {
            qd: qd.into(),
            pair,
            mode: BlockMode::ParityGate,
            herald_label: None,
        }
    }
}

/// Primitive elements of a block, as emitted by the `block` circuit macro.
pub fn expand_block(mode: BlockMode, photon: &str, path: &str, qd: &str, label: Option<&str>) -> Result<Vec<Element>> {
    let hp = || Element::Hp {
        photon: photon.into(),
        path: path.into(),
    };
    let arm = Element::QdArm {
        photon: photon.into(),
        path: path.into(),
        qd: qd.into(),
    };
    let tail = match (mode, label) {
        (BlockMode::Heralded, Some(label)) => Element::Detector {
            photon: photon.into(),
            path: path.into(),
            filter: Some(PolFilter::Circular(Polarization::L)),
            label: label.into(),
        },
        (BlockMode::Heralded, None) => return Err(Error::config("a heralded block needs a detector label")),
        (BlockMode::ParityGate, None) => Element::Z {
            photon: photon.into(),
            path: path.into(),
        },
        (BlockMode::ParityGate, Some(_)) => return Err(Error::config("a parity block takes no detector label")),
    };
    Ok(vec![hp(), arm, hp(), tail])
}

/// `Hp -> reflection -> Hp` on one path.
pub fn arm(state: &HybridState, photon: &str, path: &str, qd: &str, pair: &ReflectionPair) -> Result<HybridState> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let p = layout.path_index(ph, path)?;
    let spin = layout.spin_index(qd)?;
    let s = apply_hp(state, photon, path)?;
    let s = apply_spin_conditional_op(&s, ph, spin, p, &reflection_operator(pair))?;
    apply_hp(&s, photon, path)
}

fn path_projector(state: &HybridState, photon: usize, path: usize, pols: &[Polarization]) -> Result<PhotonOp> {
    let n = state.layout().num_paths(photon)?;
    let mut m = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    for &pol in pols {
        let k = mode(pol, path, n);
        m[(k, k)] = re(1.0);
    }
    PhotonOp::from_matrix(m)
}

/// Heralded block: returns the success branch (detector silent) followed by
/// the herald branch (detector fired), omitting impossible ones.
pub fn heralded_block(state: &HybridState, photon: &str, path: &str, cfg: &BlockConfig) -> Result<Vec<BranchOutcome>> {
    if cfg.mode != BlockMode::Heralded {
        return Err(Error::config("heralded_block needs a heralded configuration"));
    }
    let label = cfg
        .herald_label
        .as_deref()
        .ok_or_else(|| Error::config("a heralded block needs a detector label"))?;
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let p = layout.path_index(ph, path)?;
    let r_part = apply_single_photon_op(state, ph, &path_projector(state, ph, p, &[Polarization::R])?)?;
    if r_part.norm_sqr().sqrt() > AMPLITUDE_TOL {
        return Err(Error::Precondition(format!(
            "heralded block on {path} needs pure L input, found R amplitude of norm {:.3e}",
            r_part.norm_sqr().sqrt()
        )));
    }
    let out = arm(state, photon, path, &cfg.qd, &cfg.pair)?;
    let mut branches = measure(
        &out,
        &Observable::Detector {
            photon: ph,
            path: p,
            filter: Some(PolFilter::Circular(Polarization::L)),
            label: label.to_string(),
        },
    )?;
    branches.reverse();
    Ok(branches)
}

/// Parity gate: arm followed by a `Z` plate on the same path.
pub fn parity_gate(state: &HybridState, photon: &str, path: &str, cfg: &BlockConfig) -> Result<HybridState> {
    let s = arm(state, photon, path, &cfg.qd, &cfg.pair)?;
    apply_z(&s, photon, path)
}

/// Closed-form decomposition of [`parity_gate`] into its success component
/// (everything off the path, plus `s` times the spin-flipped on-path part)
/// and its leak component (`l` times the polarization-flipped on-path part).
pub fn parity_gate_components(
    state: &HybridState,
    photon: &str,
    path: &str,
    cfg: &BlockConfig,
) -> Result<(HybridState, HybridState)> {
    let layout = state.layout();
    let ph = layout.photon_index(photon)?;
    let p = layout.path_index(ph, path)?;
    let spin = layout.spin_index(&cfg.qd)?;
    let on = apply_single_photon_op(state, ph, &path_projector(state, ph, p, &Polarization::ALL)?)?;
    let off = state.sub(&on)?;
    let sigma_z = [[re(1.0), re(0.0)], [re(0.0), re(-1.0)]];
    let flipped_spin = apply_spin_op(&on, spin, &sigma_z)?;
    let success = off.add(&flipped_spin.scaled(cfg.pair.success_amplitude()))?;
    let leak = apply_z(&on, photon, path)?.scaled(cfg.pair.leak_amplitude());
    Ok((success, leak))
}
