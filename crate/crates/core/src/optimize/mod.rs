//! Control-pulse optimization: brightness at a purity floor, dominant-mode
//! matching and two-buffer output unification.

mod model;
mod nelder_mead;
mod problem;
mod single;
mod unify;

pub use model::{BufferModel, EomBuffer, MockBuffer};
pub use nelder_mead::{maximize, Search, TraceEntry};
pub use problem::{Basis, Objective, OptimizationProblem, PulseBounds, PENALTY_WEIGHT};
pub use single::{ideal_buffer_filter, optimize_single, optimize_single_with, BufferMetrics, OptimizationResult};
pub use unify::{optimize_unification, optimize_unification_with};
