//! Generation and analysis protocols built from the shipped circuits.

mod bell;
mod hbsa;
mod hbsg;

pub use bell::{
    apply_local_correction, apply_local_correction_in, make_bell, make_bell_in, photon_modes, photonic_layout,
    protocol_layout, Bell, BellFrame, HyperBellLabel,
};
pub use hbsa::{
    classify, expected_spins, hbsa_circuit, hbsa_stage1_output, leakage_between, pattern_table, run_hbsa,
    run_hbsa_stage1, run_spbsm, single_photon_bell, spatial_from_spins, spbsm_circuit, spbsm_groups, DetectorPattern,
    HbsaBranch, HbsaStage1, HBSA_CIRCUIT, SPBSM_CIRCUIT,
};
pub use hbsg::{
    hbsg_circuit, hbsg_input, hbsg_pre_bs_state, hbsg_target, run_hbsg, HbsgBranch, HbsgRun, SpinOutcome, HBSG_CIRCUIT,
};
