//! Scenario engine: configuration files, batch runs and CSV output.

mod config;
mod output;
mod run;

pub use config::{
    load_config, ControlSettings, GridSettings, OptimizationSettings, Scenario, ScenarioKind, SurfaceSettings,
};
pub use output::{emit_plotdata, run_to_dir, FAILURE_MARKER, GUIDE_Q};
pub use run::{
    execute, run_scenario, FileEntry, FilterReport, Point, RunRecord, Table, UnificationReport, PURE_INPUT,
    REPORTED_MODES,
};

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
