use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const PSD_TOL: f64 = 1e-8;
pub(crate) const TRACE_TOL: f64 = 1e-8;
/// Largest clipped negative weight tolerated before a state is rejected.
pub(crate) const MAX_CLIPPED_WEIGHT: f64 = 1e-4;
const ZERO_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
        }
    }
}

/// Temporal-spectral density matrix of a single photon.
///
/// `rho` holds kernel values `ρ(t_i, t_j)` (or `ρ(ω_i, ω_j)`), so the trace
/// is `Σ ρ_ii · step` with `step = dt` or `dω`. Most algebra is done on the
/// quadrature-folded matrix `K = ρ · step`, whose eigenvalues are the mode
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    grid: TimeGrid,
    domain: Domain,
    rho: CMatrix,
}

impl ModeState {
    /// Builds a state and checks Hermiticity, positivity and normalization.
    pub fn new(grid: TimeGrid, domain: Domain, rho: CMatrix) -> Result<Self> {
        let state = Self::from_parts(grid, domain, rho)?;
        state.validate()?;
        Ok(state)
    }

    /// Builds a state from quadrature-folded entries `K = ρ · step`.
    pub fn from_weighted(grid: TimeGrid, domain: Domain, weighted: CMatrix) -> Result<Self> {
        let step = step_for(&grid, domain);
        Self::new(grid, domain, weighted.unscale(step))
    }

    pub(crate) fn from_parts(grid: TimeGrid, domain: Domain, rho: CMatrix) -> Result<Self> {
        if rho.nrows() != grid.len() || rho.ncols() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, grid has {} points",
                rho.nrows(),
                rho.ncols(),
                grid.len()
            )));
        }
        Ok(Self { grid, domain, rho })
    }

    /// Pure state `|ψ⟩⟨ψ|`, with `ψ` normalized under the grid quadrature.
    pub fn pure(grid: TimeGrid, domain: Domain, psi: &[Complex64]) -> Result<Self> {
        Self::mixture(grid, domain, &[(1.0, psi)])
    }

    /// Convex mixture `Σ p_k |ψ_k⟩⟨ψ_k|`; each `ψ_k` is normalized first and
    /// the weights are renormalized to sum to one.
    pub fn mixture(grid: TimeGrid, domain: Domain, parts: &[(f64, &[Complex64])]) -> Result<Self> {
        let n = grid.len();
        let step = step_for(&grid, domain);
        let total: f64 = parts.iter().map(|(p, _)| *p).sum();
        if parts.is_empty() || total <= 0.0 || parts.iter().any(|(p, _)| *p < 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be non-negative with positive sum".into()));
        }
        let mut k = CMatrix::zeros(n, n);
        for (p, psi) in parts {
            if psi.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "mode has {} samples, grid has {n}",
                    psi.len()
                )));
            }
            let v = CVector::from_column_slice(psi) * Complex64::new(step.sqrt(), 0.0);
            let norm2 = v.norm_squared();
            if norm2 <= ZERO_TRACE {
                return Err(Error::ZeroTrace(norm2));
            }
            k += (&v * v.adjoint()) * Complex64::new(p / (total * norm2), 0.0);
        }
        Self::new(grid, domain, k.unscale(step))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature step of the state's domain.
    pub fn step(&self) -> f64 {
        step_for(&self.grid, self.domain)
    }

    /// Sample coordinates: times, or centered angular frequencies.
    pub fn coordinates(&self) -> Vec<f64> {
        match self.domain {
            Domain::Time => self.grid.points(),
            Domain::Frequency => self.grid.omegas(),
        }
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// `K = ρ · step`.
    pub fn weighted(&self) -> CMatrix {
        self.rho.scale(self.step())
    }

    pub fn trace(&self) -> f64 {
        linalg::real_trace(&self.rho) * self.step()
    }

    /// Diagonal `ρ_ii · step`: the occupation of each grid bin.
    pub fn populations(&self) -> Vec<f64> {
        let s = self.step();
        (0..self.len()).map(|i| self.rho[(i, i)].re * s).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let scale = linalg::max_abs(&self.rho);
        let defect = linalg::hermitian_defect(&self.rho);
        if scale > 0.0 && defect > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(defect / scale));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(tr));
        }
        let eig = linalg::hermitian_eigenvalues(&linalg::hermitian_part(&self.weighted()));
        let largest = eig.first().copied().unwrap_or(0.0);
        let smallest = eig.last().copied().unwrap_or(0.0);
        if smallest < -PSD_TOL * largest.max(0.0) {
            return Err(Error::NotPositive(-smallest));
        }
        Ok(())
    }

    /// Zero-pads a time-domain state to `n_points` nodes at the same spacing.
    pub fn zero_pad(&self, n_points: usize) -> Result<Self> {
        if self.domain != Domain::Time {
            return Err(Error::WrongDomain { expected: "time" });
        }
        let grid = self.grid.extended(n_points)?;
        let n = self.len();
        let mut rho = CMatrix::zeros(n_points, n_points);
        rho.view_mut((0, 0), (n, n)).copy_from(&self.rho);
        Ok(Self {
            grid,
            domain: self.domain,
            rho,
        })
    }
}

pub(crate) fn step_for(grid: &TimeGrid, domain: Domain) -> f64 {
    match domain {
        Domain::Time => grid.dt(),
        Domain::Frequency => grid.d_omega(),
    }
}

/// Symmetrizes, clips negative eigenvalues and renormalizes a raw kernel
/// matrix (same units as `ModeState::rho`).
///
/// Fails with `ZeroTrace` when nothing positive remains and with
/// `NotPositive` when the clipped weight exceeds 10⁻⁴ of the retained trace.
pub fn project_physical(raw: &CMatrix, grid: &TimeGrid, domain: Domain) -> Result<ModeState> {
    let n = grid.len();
    if raw.nrows() != n || raw.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, grid has {n} points",
            raw.nrows(),
            raw.ncols()
        )));
    }
    let step = step_for(grid, domain);
    let k = linalg::hermitian_part(raw).scale(step);
    project_weighted(k, grid, domain)
}

/// Same as [`project_physical`] for an already quadrature-folded matrix.
pub(crate) fn project_weighted(k: CMatrix, grid: &TimeGrid, domain: Domain) -> Result<ModeState> {
    let step = step_for(grid, domain);
    let k = linalg::hermitian_part(&k);
    let (vals, vecs) = linalg::hermitian_eigen(&k);
    let largest = vals.first().copied().unwrap_or(0.0);
    if largest <= ZERO_TRACE {
        return Err(Error::ZeroTrace(largest.max(0.0)));
    }
    let negative: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let positive: f64 = vals.iter().filter(|&&v| v > 0.0).sum();
    if positive <= ZERO_TRACE {
        return Err(Error::ZeroTrace(positive));
    }
    let smallest = vals.last().copied().unwrap_or(0.0);
    let cleaned = if smallest >= -1e-12 * largest {
        k
    } else {
        if negative > MAX_CLIPPED_WEIGHT * positive {
            return Err(Error::NotPositive(negative / positive));
        }
        let n = k.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for (idx, &v) in vals.iter().enumerate() {
            if v > 0.0 {
                let col = vecs.column(idx);
                acc += (col * col.adjoint()).scale(v);
            }
        }
        linalg::hermitian_part(&acc)
    };
    let tr = linalg::real_trace(&cleaned);
    if tr <= ZERO_TRACE {
        return Err(Error::ZeroTrace(tr));
    }
    ModeState::from_parts(*grid, domain, cleaned.unscale(tr * step))
}
