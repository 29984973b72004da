//! Simulation of coherent temporal-mode filtering for noisy single photons.
//!
//! Photons are temporal-spectral density matrices on a uniform grid
//! ([`modespace`]); [`emitters`] builds noisy quantum-dot-like states,
//! [`buffer`] propagates them through an off-resonant cascaded-absorption
//! buffer described by its Green's operator, [`filters`] provides the passive
//! spectral-filter baseline, [`optimize`] shapes control pulses, and
//! [`harness`] runs configured scenarios and writes CSV tables.

pub mod emitters;
pub mod buffer;
pub mod error;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod modespace;
pub mod optimize;

pub use error::{Error, Result};
