#![allow(dead_code)]

use num_complex::Complex64;
use qbuffer::linalg::CMatrix;
use qbuffer::modespace::{Domain, ModeState, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

/// Random state of the given rank, built as `A A†`.
pub fn random_state(grid: TimeGrid, rank: usize, rng: &mut ChaCha8Rng) -> ModeState {
    let a = random_matrix(grid.len(), rank, rng);
    let k = &a * a.adjoint();
    let tr: f64 = (0..grid.len()).map(|i| k[(i, i)].re).sum();
    ModeState::from_weighted(grid, Domain::Time, k.unscale(tr)).unwrap()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn gaussian(grid: &TimeGrid, center: f64, width: f64) -> Vec<Complex64> {
    grid.points()
        .iter()
        .map(|&t| Complex64::new((-(t - center).powi(2) / (2.0 * width * width)).exp(), 0.0))
        .collect()
}

pub fn exponential(grid: &TimeGrid, gamma: f64) -> Vec<Complex64> {
    grid.points()
        .iter()
        .map(|&t| Complex64::new(if t >= 0.0 { (-gamma * t / 2.0).exp() } else { 0.0 }, 0.0))
        .collect()
}

/// Largest eigenvalue of a Hermitian positive matrix by power iteration.
pub fn power_iteration(k: &CMatrix) -> f64 {
    let n = k.nrows();
    let mut v = nalgebra::DVector::from_element(n, Complex64::new(1.0, 0.0));
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = k * &v;
        let next = w.norm();
        v = w / Complex64::new(next, 0.0);
        if (next - lambda).abs() < 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}
