//! Exact sparse state-vector simulation of a few photons in
//! polarization-resolved paths.
//!
//! Path `s` carries two modes, `(s, H)` and `(s, V)`. States map photon
//! occupations to complex amplitudes; elements act by mode-operator
//! substitution, so multi-photon occupations pick up the right bosonic factors.

mod detection;
mod elements;
mod state;

pub use detection::{
    condition_on_paths, measure_all, measure_qubits, register_clicks, sample_occupation,
    ClickPattern, DetectorId, DetectorModel, QubitBasis,
};
pub use elements::{
    apply_hwp, apply_loss, apply_pbs, apply_pbs_with, apply_phase_flip, loss_branch,
    loss_branches, single_photon_polarization, LossBranch, LossSector, ReflectionPhase,
};
pub use state::{
    make_bell_group, make_bell_pair, make_ghz, ModeLabel, Occupation, PhotonicState,
    Polarization, PRUNE_TOLERANCE,
};
