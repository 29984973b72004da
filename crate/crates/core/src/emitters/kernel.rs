use num_complex::Complex64;

use super::quadrature::{gauss_hermite_normal, gauss_laguerre};
use super::{EmitterSpec, JitterKind};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::{Domain, ModeState, TimeGrid};

/// Jitter nodes used when callers do not choose.
pub const DEFAULT_QUADRATURE_POINTS: usize = 12;

/// Tail weight past the grid end above which a warning is logged.
const TAIL_WARN: f64 = 1e-4;
/// Tail weight past the grid end that is rejected outright.
const TAIL_ERROR: f64 = 1e-2;
/// Largest fraction of the jitter-averaged trace allowed to fall off-grid.
const MAX_OFF_GRID: f64 = 1e-2;

/// Jitter-free emitter state with emission starting at `t = 0`.
pub fn dephasing_kernel(spec: &EmitterSpec, grid: &TimeGrid) -> Result<ModeState> {
    spec.validate()?;
    let tail = (-spec.gamma * grid.t_end()).exp();
    if grid.t_end() <= 0.0 || tail > TAIL_ERROR {
        return Err(Error::GridTooShort(format!(
            "e^(-gamma t_end) = {tail:.3e} exceeds {TAIL_ERROR:e}"
        )));
    }
    if tail >= TAIL_WARN {
        log::warn!("emission tail e^(-gamma t_end) = {tail:.2e} is cut off by the grid");
    }
    let k = component(spec, grid, 0.0).ok_or_else(|| Error::GridTooShort("no grid point after emission onset".into()))?;
    ModeState::from_weighted(*grid, Domain::Time, k)
}

/// Averages the kernel over spectral diffusion and timing jitter.
///
/// Spectral diffusion with a normal distribution of carriers multiplies the
/// kernel by `e^{−σ²(t₁−t₂)²/2}` exactly. Jitter delays are integrated with a
/// `quadrature_points`-node Gauss rule.
pub fn apply_inhomogeneous(spec: &EmitterSpec, grid: &TimeGrid, quadrature_points: usize) -> Result<ModeState> {
    if quadrature_points == 0 {
        return Err(Error::InvalidArgument("quadrature_points must be at least 1".into()));
    }
    spec.validate()?;
    if spec.jitter.is_trivial() {
        return dephasing_kernel(spec, grid);
    }
    let s = spec.jitter.scale;
    let nodes: Vec<(f64, f64)> = match spec.jitter.kind {
        JitterKind::None => unreachable!(),
        JitterKind::Gaussian => gauss_hermite_normal(quadrature_points)
            .into_iter()
            .map(|(x, w)| (s * x, w))
            .collect(),
        JitterKind::Exponential => gauss_laguerre(quadrature_points)
            .into_iter()
            .map(|(x, w)| (s * x, w))
            .collect(),
    };
    delayed_mixture(spec, grid, &nodes)
}

/// Mixture of emission onsets `t₀` with the given probabilities.
///
/// Every delayed component is normalized on the grid before mixing; the
/// weight the continuum kernel would put outside the grid is accounted for
/// analytically and must stay below 1 %.
pub fn delayed_mixture(spec: &EmitterSpec, grid: &TimeGrid, nodes: &[(f64, f64)]) -> Result<ModeState> {
    spec.validate()?;
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    if nodes.is_empty() || total <= 0.0 || nodes.iter().any(|n| n.1 < 0.0 || !n.0.is_finite()) {
        return Err(Error::InvalidArgument("delay weights must be non-negative with positive sum".into()));
    }
    let n = grid.len();
    let mut acc = CMatrix::zeros(n, n);
    let mut off_grid = 0.0;
    let mut kept = 0.0;
    for &(t0, w) in nodes {
        let w = w / total;
        if w == 0.0 {
            continue;
        }
        let before = 1.0 - (-spec.gamma * (grid.t_start() - t0).max(0.0)).exp();
        let after = (-spec.gamma * (grid.t_end() - t0).max(0.0)).exp();
        off_grid += w * (before + after).min(1.0);
        if let Some(k) = component(spec, grid, t0) {
            acc += k.scale(w);
            kept += w;
        }
    }
    if off_grid > MAX_OFF_GRID || kept == 0.0 {
        return Err(Error::GridTooShort(format!(
            "{:.2}% of the jitter-averaged emission lies outside [{}, {}] ns",
            100.0 * off_grid,
            grid.t_start(),
            grid.t_end()
        )));
    }
    ModeState::from_weighted(*grid, Domain::Time, acc.unscale(kept))
}

/// Unit-trace folded kernel for emission starting at `t0`, or `None` when
/// no grid point lies at or after the onset.
fn component(spec: &EmitterSpec, grid: &TimeGrid, t0: f64) -> Option<CMatrix> {
    let n = grid.len();
    let t = grid.points();
    // small tolerance so an onset landing on a node is not lost to rounding
    let first = t.iter().position(|&ti| ti >= t0 - 1e-12 * grid.dt())?;
    let amp: Vec<f64> = t.iter().map(|&ti| (-0.5 * spec.gamma * (ti - t0).max(0.0)).exp()).collect();
    let norm: f64 = amp[first..].iter().map(|a| a * a).sum();
    let sigma2 = spec.sigma_diff * spec.sigma_diff;
    let mut k = CMatrix::zeros(n, n);
    for i in first..n {
        for j in first..=i {
            let tau = t[i] - t[j];
            let mag = amp[i] * amp[j] * (-spec.gamma_star * tau - 0.5 * sigma2 * tau * tau).exp() / norm;
            let z = Complex64::from_polar(mag, -spec.omega0 * tau);
            k[(i, j)] = z;
            k[(j, i)] = z.conj();
        }
    }
    Some(k)
}
