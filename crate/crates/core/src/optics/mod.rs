//! Optical elements, circuits and the circuit-description language.

mod circuit;
mod elements;
mod run;

pub use circuit::{parse_circuit, Circuit, QdDecl};
pub use elements::{
    apply_bs, apply_cpbs, apply_hp, apply_pbs, apply_wfc, apply_z, bs_op, cpbs_op, hp_op, local_polarization_op,
    path_swap, pbs_op, polarization_bit_flip, polarization_phase_flip, scale_op, z_op, Element, ElementKind,
};
pub use run::{evolve, run_circuit, RawBranch};
