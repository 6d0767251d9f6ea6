//! Simulation and analytics for an all-photonic two-dimensional quantum
//! repeater that distributes n-party GHZ states.
//!
//! The crate is layered bottom-up:
//!
//! * [`optics`] — sparse Fock-space states of polarization-encoded photons,
//!   the linear-optical elements (PBS, HWP), loss and threshold detection.
//! * [`analyzer`] — the linear-optical GHZ analyzer, click classification,
//!   entanglement swapping and the dark-count error model.
//! * [`channel`] — fiber, feedforward and QND transmittance and the gain.
//! * [`multiplexing`] — grouping efficiency of spatially multiplexed photons.
//! * [`yields`] — binary entropy, hashing yield, distance sweeps, cutoff.
//! * [`cli`] — the command-line front end used by the `ghz-repeater` binary.

pub mod analyzer;
pub mod channel;
pub mod cli;
mod error;
pub mod mc;
pub mod multiplexing;
pub mod optics;
pub mod yields;

pub use error::{Error, Result};
