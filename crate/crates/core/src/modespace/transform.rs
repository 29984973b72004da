use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::state::{Domain, ModeState};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Unitary map between time samples and centered frequency bins,
/// `ψ̃(ω_k) = n^{-1/2} Σ_j ψ(t_j) e^{+i ω_k (t_j - t_0)}`.
///
/// With this sign a carrier `e^{-iω₀t}` sits at `+ω₀`.
pub struct ModeFourier {
    n: usize,
    shift: Vec<Complex64>,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    backward: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl ModeFourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let m = (n / 2) as f64;
        let shift = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * m * j as f64 / n as f64))
            .collect();
        Self {
            n,
            shift,
            // rustfft's inverse transform carries the `+i` exponent
            forward: planner.plan_fft_inverse(n),
            backward: planner.plan_fft_forward(n),
        }
    }

    /// Time samples to frequency bins, in place.
    pub fn to_frequency(&self, v: &mut [Complex64]) {
        let scale = 1.0 / (self.n as f64).sqrt();
        v.iter_mut().zip(&self.shift).for_each(|(x, s)| *x *= s);
        self.forward.process(v);
        v.iter_mut().for_each(|x| *x *= scale);
    }

    /// Frequency bins to time samples, in place.
    pub fn to_time(&self, v: &mut [Complex64]) {
        let scale = 1.0 / (self.n as f64).sqrt();
        self.backward.process(v);
        v.iter_mut()
            .zip(&self.shift)
            .for_each(|(x, s)| *x *= s.conj() * scale);
    }

    /// `U M U†` where `U` applies `f` to each column vector.
    fn conjugate(&self, m: &CMatrix, f: impl Fn(&Self, &mut [Complex64])) -> CMatrix {
        let n = self.n;
        let mut left = m.clone();
        for mut col in left.column_iter_mut() {
            let mut buf: Vec<Complex64> = col.iter().copied().collect();
            f(self, &mut buf);
            col.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
        }
        // (U L†)† = L U†
        let mut out = left.adjoint();
        for mut col in out.column_iter_mut() {
            let mut buf: Vec<Complex64> = col.iter().copied().collect();
            f(self, &mut buf);
            col.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
        }
        let out = out.adjoint();
        debug_assert_eq!(out.nrows(), n);
        out
    }
}

pub fn to_frequency(state: &ModeState) -> Result<ModeState> {
    if state.domain() != Domain::Time {
        return Err(Error::WrongDomain { expected: "time" });
    }
    let fourier = ModeFourier::new(state.len());
    let k = fourier.conjugate(&state.weighted(), |f, v| f.to_frequency(v));
    let grid = *state.grid();
    ModeState::from_parts(grid, Domain::Frequency, k.unscale(grid.d_omega()))
}

pub fn to_time(state: &ModeState) -> Result<ModeState> {
    if state.domain() != Domain::Frequency {
        return Err(Error::WrongDomain { expected: "frequency" });
    }
    let fourier = ModeFourier::new(state.len());
    let k = fourier.conjugate(&state.weighted(), |f, v| f.to_time(v));
    let grid = *state.grid();
    ModeState::from_parts(grid, Domain::Time, k.unscale(grid.dt()))
}

/// Transforms a single sampled time mode to its frequency amplitudes, with
/// quadrature normalization carried over (`Σ|ψ|²dt = Σ|ψ̃|²dω`).
pub fn mode_to_frequency(psi: &[Complex64], dt: f64, d_omega: f64) -> Vec<Complex64> {
    let fourier = ModeFourier::new(psi.len());
    let mut v = psi.to_vec();
    fourier.to_frequency(&mut v);
    let s = (dt / d_omega).sqrt();
    v.iter_mut().for_each(|z| *z *= s);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::modespace::{grid::make_grid, metrics::purity};

    #[test]
    fn carrier_lands_on_its_frequency() {
        let g = make_grid(64, 0.0, 6.3).unwrap();
        let k0 = 40usize;
        let w0 = g.omega(k0);
        let psi: Vec<Complex64> = g.points().iter().map(|&t| Complex64::from_polar(1.0, -w0 * t)).collect();
        let s = ModeState::pure(g, Domain::Time, &psi).unwrap();
        let f = to_frequency(&s).unwrap();
        let pops = f.populations();
        let peak = (0..64).max_by(|&a, &b| pops[a].partial_cmp(&pops[b]).unwrap()).unwrap();
        assert_eq!(peak, k0);
        assert!((pops[k0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_domain_is_rejected() {
        let g = make_grid(8, 0.0, 1.0).unwrap();
        let psi = vec![Complex64::new(1.0, 0.0); 8];
        let s = ModeState::pure(g, Domain::Time, &psi).unwrap();
        assert!(matches!(to_time(&s), Err(Error::WrongDomain { .. })));
        let f = to_frequency(&s).unwrap();
        assert!(matches!(to_frequency(&f), Err(Error::WrongDomain { .. })));
    }

    #[test]
    fn odd_sizes_round_trip() {
        let g = make_grid(9, -1.0, 1.0).unwrap();
        let psi: Vec<Complex64> = g.points().iter().map(|&t| Complex64::new((-t * t).exp(), t)).collect();
        let s = ModeState::pure(g, Domain::Time, &psi).unwrap();
        let back = to_time(&to_frequency(&s).unwrap()).unwrap();
        assert!(linalg::max_abs(&(back.rho() - s.rho())) < 1e-12);
        assert!((purity(&back) - 1.0).abs() < 1e-12);
    }
}
