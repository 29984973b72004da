use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform time grid in nanoseconds.
///
/// Inner products use uniform weights `dt` on every node, so a shift by a
/// whole number of nodes is an exact isometry and the discrete Fourier
/// transform is unitary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n_points: usize,
    t_start: f64,
    t_end: f64,
}

impl TimeGrid {
    pub fn new(n_points: usize, t_start: f64, t_end: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::InvalidArgument(format!(
                "grid end {t_end} must exceed start {t_start}"
            )));
        }
        Ok(Self {
            n_points,
            t_start,
            t_end,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Spacing of the conjugate angular-frequency grid, `2π / (n dt)`.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dt())
    }

    /// Angular frequency of bin `k` on the centered conjugate grid.
    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.d_omega()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.omega(k)).collect()
    }

    /// Largest representable carrier shift.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt()
    }

    /// Same spacing, extended to `n_points` nodes from the same start.
    pub fn extended(&self, n_points: usize) -> Result<Self> {
        if n_points < self.n_points {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink a {}-point grid to {n_points}",
                self.n_points
            )));
        }
        let dt = self.dt();
        Self::new(n_points, self.t_start, self.t_start + (n_points - 1) as f64 * dt)
    }

    /// Grids match when they have the same size and their endpoints agree to
    /// one part in 10¹².
    pub fn matches(&self, other: &TimeGrid) -> bool {
        let scale = self.t_end.abs().max(self.t_start.abs()).max(1.0);
        self.n_points == other.n_points
            && (self.t_start - other.t_start).abs() <= 1e-12 * scale
            && (self.t_end - other.t_end).abs() <= 1e-12 * scale
    }
}

/// Convenience constructor mirroring [`TimeGrid::new`].
pub fn make_grid(n_points: usize, t_start: f64, t_end: f64) -> Result<TimeGrid> {
    TimeGrid::new(n_points, t_start, t_end)
}
