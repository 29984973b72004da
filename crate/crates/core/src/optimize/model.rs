use num_complex::Complex64;

use crate::buffer::{read_in_factor, read_out_factor, BufferConfig, ControlPulse, PulseShape};
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::modespace::TimeGrid;

/// Factorized buffer: `G = R(read_out) · T(read_in)`, both acting on
/// quadrature-weighted amplitudes.
pub trait BufferModel: Sync {
    fn grid(&self) -> &TimeGrid;
    /// `m × n` storage map.
    fn read_in(&self, pulse: &ControlPulse) -> Result<CMatrix>;
    /// `n × m` retrieval map.
    fn read_out(&self, pulse: &ControlPulse) -> Result<CMatrix>;
    /// Identifies the model's physical parameters; equal fingerprints mean
    /// equal buffers.
    fn fingerprint(&self) -> String;
    /// Extra feasibility check on a read-in/read-out pair.
    fn check_pair(&self, _read_in: &ControlPulse, _read_out: &ControlPulse) -> Result<()> {
        Ok(())
    }
}

/// The physical buffer, solved from its equations of motion.
#[derive(Debug, Clone, Copy)]
pub struct EomBuffer {
    pub config: BufferConfig,
    pub grid: TimeGrid,
}

impl EomBuffer {
    pub fn new(config: BufferConfig, grid: TimeGrid) -> Self {
        Self { config, grid }
    }
}

impl BufferModel for EomBuffer {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn fingerprint(&self) -> String {
        format!("eom {:?}", self.config)
    }

    fn read_in(&self, pulse: &ControlPulse) -> Result<CMatrix> {
        read_in_factor(&self.config, pulse, &self.grid)
    }

    fn read_out(&self, pulse: &ControlPulse) -> Result<CMatrix> {
        read_out_factor(&self.config, pulse, &self.grid)
    }

    fn check_pair(&self, read_in: &ControlPulse, read_out: &ControlPulse) -> Result<()> {
        crate::buffer::green_factors_check(&self.config, read_in, read_out)
    }
}

/// Rank-one toy buffer: stores the projection onto the normalized control
/// shape with amplitude efficiency `lambda` and re-emits a fixed mode.
#[derive(Debug, Clone)]
pub struct MockBuffer {
    pub grid: TimeGrid,
    pub lambda: f64,
    pub output: Vec<Complex64>,
}

impl MockBuffer {
    /// `output` is normalized under the grid quadrature.
    pub fn new(grid: TimeGrid, lambda: f64, output: Vec<Complex64>) -> Self {
        Self { grid, lambda, output }
    }
}

impl BufferModel for MockBuffer {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn fingerprint(&self) -> String {
        format!("mock {:?} {:?}", self.lambda, self.output)
    }

    fn read_in(&self, pulse: &ControlPulse) -> Result<CMatrix> {
        let dt = self.grid.dt();
        let shape = normalized_shape(&pulse.shape, &self.grid);
        Ok(CMatrix::from_fn(1, self.grid.len(), |_, j| shape[j].conj() * (self.lambda * dt.sqrt())))
    }

    fn read_out(&self, _pulse: &ControlPulse) -> Result<CMatrix> {
        let s = self.grid.dt().sqrt();
        Ok(CMatrix::from_fn(self.grid.len(), 1, |i, _| self.output[i] * s))
    }
}

fn normalized_shape(shape: &PulseShape, grid: &TimeGrid) -> Vec<Complex64> {
    let v: Vec<Complex64> = grid.points().iter().map(|&t| shape.value(t)).collect();
    let norm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dt()).sqrt();
    if norm > 0.0 {
        v.iter().map(|z| z / norm).collect()
    } else {
        v
    }
}
