//! Discretized temporal and spectral mode algebra.

pub mod container;
pub mod decomposition;
pub mod grid;
pub mod metrics;
pub mod state;
pub mod transform;

pub use container::{load_state, read_state, save_state, write_state};
pub use decomposition::{eigendecompose, inner, normalize_mode, ModeDecomposition};
pub use grid::{make_grid, TimeGrid};
pub use metrics::{inter_indistinguishability, purity, schmidt_number, self_indistinguishability};
pub use state::{project_physical, Domain, ModeState};
pub use transform::{to_frequency, to_time};
