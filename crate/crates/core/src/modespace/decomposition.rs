use num_complex::Complex64;

use super::grid::TimeGrid;
use super::state::{Domain, ModeState, HERMITIAN_TOL, MAX_CLIPPED_WEIGHT};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Spectral decomposition `ρ = Σ α_k |ψ_k⟩⟨ψ_k|`.
///
/// Weights are sorted in descending order and sum to one. Mode columns are
/// normalized under the grid quadrature (`Σ |ψ_k|² · step = 1`) and carry a
/// fixed global phase: their largest-magnitude sample is real and positive.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    pub grid: TimeGrid,
    pub domain: Domain,
    pub weights: Vec<f64>,
    pub modes: CMatrix,
}

impl ModeDecomposition {
    pub fn mode(&self, k: usize) -> Vec<Complex64> {
        self.modes.column(k).iter().copied().collect()
    }

    pub fn dominant_weight(&self) -> f64 {
        self.weights[0]
    }

    /// Effective mode count `1 / Σ α_k²`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.weights.iter().map(|a| a * a).sum::<f64>()
    }

    /// Kernel values `Σ α_k ψ_k ψ_k†`, in the same units as `ModeState::rho`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.modes.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for (k, &a) in self.weights.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let col = self.modes.column(k);
            acc += (col * col.adjoint()).scale(a);
        }
        acc
    }
}

pub fn eigendecompose(state: &ModeState) -> Result<ModeDecomposition> {
    let scale = linalg::max_abs(state.rho());
    let defect = linalg::hermitian_defect(state.rho());
    if scale > 0.0 && defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect / scale));
    }
    let step = state.step();
    let k = linalg::hermitian_part(&state.weighted());
    let (mut vals, mut vecs) = linalg::hermitian_eigen(&k);
    let negative: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let positive: f64 = vals.iter().filter(|&&v| v > 0.0).sum();
    if positive <= 0.0 {
        return Err(Error::ZeroTrace(positive));
    }
    if negative > MAX_CLIPPED_WEIGHT * positive {
        return Err(Error::NotPositive(negative / positive));
    }
    vals.iter_mut().for_each(|v| *v = v.max(0.0) / positive);
    linalg::fix_column_phases(&mut vecs);
    let modes = vecs.unscale(step.sqrt());
    Ok(ModeDecomposition {
        grid: *state.grid(),
        domain: state.domain(),
        weights: vals,
        modes,
    })
}

/// Quadrature-weighted inner product `⟨a|b⟩ = Σ a_i* b_i · step`.
pub fn inner(a: &[Complex64], b: &[Complex64], step: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * step
}

/// Normalizes a sampled mode under the grid quadrature.
pub fn normalize_mode(psi: &[Complex64], step: f64) -> Result<Vec<Complex64>> {
    let norm2 = inner(psi, psi, step).re;
    if norm2 <= 1e-300 {
        return Err(Error::ZeroTrace(norm2));
    }
    let s = 1.0 / norm2.sqrt();
    Ok(psi.iter().map(|z| z * s).collect())
}
