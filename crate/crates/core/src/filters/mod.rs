//! Passive intensity filtering: time-stationary spectral passbands and the
//! brightness/purity frontier they trace out.

mod gate;
mod passband;
mod sweep;

pub use gate::{apply_gate, gate_sweep, GateFamily};
pub use passband::{apply_passband, apply_transfer, PassbandShape, PassbandSpec};
pub use sweep::{
    filter_envelope, filter_sweep, pareto_indices, Envelope, Frontier, PassbandFamily, SweepPoint, SweepRange,
    DEFAULT_PADDING, DEFAULT_RESOLUTION,
};
