//! Off-resonant cascaded-absorption buffer: equations of motion, Green's
//! operator and its singular modes, buffered output states and efficiency
//! maps.

pub mod config;
pub mod container;
mod eom;
mod green;
mod surface;

pub use config::{BufferConfig, ControlPulse, PulseShape};
pub use container::{load_green, read_green, save_green, write_green};
pub use eom::{solve_eom, EomSolution};
pub use green::{
    buffer_output_state, green_factors, green_factors_check, green_function, green_function_unchecked, read_in_factor, read_out_factor,
    shifted_readout, GreenFactors, GreenMetadata, GreenOperator, ShiftedReadout, PASSIVITY_TOL,
};
pub use surface::{
    calibrate_paper_like, efficiency_surface, Calibration, SurfaceSetup, ANCHOR_EFFICIENCY, ANCHOR_ENERGY_PJ,
};
