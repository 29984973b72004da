mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qbuffer::emitters::{dephasing_kernel, EmitterSpec};
use qbuffer::linalg::CMatrix;
use qbuffer::modespace::*;
use qbuffer::Error;

#[test]
fn grid_examples() {
    let g = make_grid(3, 0.0, 1.0).unwrap();
    assert_eq!(g.points(), vec![0.0, 0.5, 1.0]);
    assert_eq!(g.dt(), 0.5);
    let g = make_grid(2, 0.0, 1.0).unwrap();
    assert_eq!(g.points(), vec![0.0, 1.0]);
    assert!(matches!(make_grid(1, 0.0, 1.0), Err(Error::InvalidArgument(_))));
    assert!(make_grid(4, 1.0, 1.0).is_err());
}

#[test]
fn dephased_dominant_weight_matches_dense_oracle() {
    let (gamma, gamma_star) = (1.0, 0.5);
    let grid = make_grid(64, 0.0, 12.0).unwrap();
    let state = dephasing_kernel(&EmitterSpec::ideal(gamma).with_dephasing(gamma_star), &grid).unwrap();
    let t = grid.points();
    let mut k = CMatrix::from_fn(64, 64, |i, j| {
        let v = (-gamma * (t[i] + t[j]) / 2.0 - gamma_star * (t[i] - t[j]).abs()).exp();
        Complex64::new(v, 0.0)
    });
    let tr: f64 = (0..64).map(|i| k[(i, i)].re).sum();
    k.unscale_mut(tr);
    let oracle = power_iteration(&k);
    let alpha0 = eigendecompose(&state).unwrap().dominant_weight();
    assert!((alpha0 - oracle).abs() < 1e-6, "{alpha0} vs {oracle}");
}

#[test]
fn purity_examples() {
    let grid = make_grid(16, 0.0, 1.0).unwrap();
    let a: Vec<Complex64> = (0..16).map(|i| Complex64::new(if i < 8 { 1.0 } else { 0.0 }, 0.0)).collect();
    let b: Vec<Complex64> = (0..16).map(|i| if i < 8 { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.3) }).collect();
    let pure = ModeState::pure(grid, Domain::Time, &a).unwrap();
    assert!((self_indistinguishability(&pure) - 1.0).abs() < 1e-8);
    let half = ModeState::mixture(grid, Domain::Time, &[(0.5, &a), (0.5, &b)]).unwrap();
    assert!((self_indistinguishability(&half) - 0.5).abs() < 1e-12);
    let mix = ModeState::mixture(grid, Domain::Time, &[(0.7, &a), (0.3, &b)]).unwrap();
    assert!((self_indistinguishability(&mix) - 0.58).abs() < 1e-12);
    assert!((schmidt_number(&mix) - 1.0 / 0.58).abs() < 1e-12);
}

#[test]
fn overlap_examples() {
    let grid = make_grid(16, 0.0, 1.0).unwrap();
    let a: Vec<Complex64> = (0..16).map(|i| Complex64::new(if i < 8 { 1.0 } else { 0.0 }, 0.0)).collect();
    let b: Vec<Complex64> = (0..16).map(|i| Complex64::new(if i < 8 { 0.0 } else { 1.0 }, 0.0)).collect();
    let sa = ModeState::pure(grid, Domain::Time, &a).unwrap();
    let sb = ModeState::pure(grid, Domain::Time, &b).unwrap();
    assert!((inter_indistinguishability(&sa, &sa).unwrap() - 1.0).abs() < 1e-12);
    assert!(inter_indistinguishability(&sa, &sb).unwrap().abs() < 1e-15);
    let other = make_grid(16, 0.0, 2.0).unwrap();
    let sc = ModeState::pure(other, Domain::Time, &a).unwrap();
    assert!(matches!(inter_indistinguishability(&sa, &sc), Err(Error::GridMismatch)));
}

#[test]
fn exponential_overlap_matches_closed_form() {
    // decay times 0.1 and 0.2 ns: |∫ψa*ψb|² = 4τaτb/(τa+τb)² = 8/9
    let grid = make_grid(1024, 0.0, 2.5).unwrap();
    let a = ModeState::pure(grid, Domain::Time, &exponential(&grid, 10.0)).unwrap();
    let b = ModeState::pure(grid, Domain::Time, &exponential(&grid, 5.0)).unwrap();
    let v = inter_indistinguishability(&a, &b).unwrap();
    assert!((v - 8.0 / 9.0).abs() < 1e-4, "{v}");
    assert!((v - inter_indistinguishability(&b, &a).unwrap()).abs() < 1e-15);
}

#[test]
fn fourier_round_trip_preserves_trace_and_purity() {
    let mut r = rng(11);
    for n in [31, 32] {
        let grid = make_grid(n, -2.0, 3.0).unwrap();
        let s = random_state(grid, 3, &mut r);
        let f = to_frequency(&s).unwrap();
        assert_eq!(f.domain(), Domain::Frequency);
        assert!((f.trace() - 1.0).abs() < 1e-8);
        assert!((purity(&f) - purity(&s)).abs() < 1e-8);
        let back = to_time(&f).unwrap();
        assert!(max_abs(&(back.rho() - s.rho())) < 1e-8 * max_abs(s.rho()));
        assert!(matches!(to_time(&s), Err(Error::WrongDomain { .. })));
        assert!(matches!(to_frequency(&f), Err(Error::WrongDomain { .. })));
    }
}

fn rms_width(state: &ModeState) -> f64 {
    let x = state.coordinates();
    let p = state.populations();
    let mean: f64 = x.iter().zip(&p).map(|(x, p)| x * p).sum();
    x.iter().zip(&p).map(|(x, p)| (x - mean).powi(2) * p).sum::<f64>().sqrt()
}

#[test]
fn gaussian_spectral_width_obeys_uncertainty() {
    let sigma_t = 0.3;
    let grid = make_grid(1024, -6.0, 6.0).unwrap();
    // |ψ|² has rms σ_t when ψ has rms √2·σ_t
    let psi = gaussian(&grid, 0.0, 2f64.sqrt() * sigma_t);
    let s = ModeState::pure(grid, Domain::Time, &psi).unwrap();
    assert!((rms_width(&s) - sigma_t).abs() < 1e-6);
    let f = to_frequency(&s).unwrap();
    let expected = 1.0 / (2.0 * sigma_t);
    assert!((rms_width(&f) / expected - 1.0).abs() < 0.01);
}

#[test]
fn projection_examples() {
    let mut r = rng(5);
    let grid = make_grid(12, 0.0, 1.0).unwrap();
    let s = random_state(grid, 4, &mut r);
    let again = project_physical(s.rho(), &grid, Domain::Time).unwrap();
    assert!(max_abs(&(again.rho() - s.rho())) < 1e-12 * max_abs(s.rho()));

    let noise = random_matrix(12, 12, &mut r);
    let anti = (&noise - noise.adjoint()) * Complex64::new(0.5, 0.0);
    let anti = anti.unscale(max_abs(&anti)) * Complex64::new(1e-12, 0.0);
    let cleaned = project_physical(&(s.rho() + anti), &grid, Domain::Time).unwrap();
    assert!(max_abs(&(cleaned.rho() - s.rho())) < 1e-11);

    let zeros = CMatrix::zeros(12, 12);
    assert!(matches!(project_physical(&zeros, &grid, Domain::Time), Err(Error::ZeroTrace(_))));
}

#[test]
fn random_state_invariants() {
    let mut r = rng(21);
    for trial in 0..10 {
        let n = 8 + trial * 3;
        let grid = make_grid(n, -1.0, 1.0 + trial as f64).unwrap();
        let s = random_state(grid, 1 + trial % 5, &mut r);
        let p = purity(&s);
        assert!(p >= 1.0 / n as f64 - 1e-8 && p <= 1.0 + 1e-8);
        let d = eigendecompose(&s).unwrap();
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(d.weights.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.weights.iter().all(|&w| w >= -1e-10));
        assert!(max_abs(&(d.reconstruct() - s.rho())) < 1e-8 * max_abs(s.rho()));
        let gram = d.modes.adjoint() * &d.modes * Complex64::new(grid.dt(), 0.0);
        let rank = d.weights.iter().filter(|&&w| w > 1e-9).count();
        let gram = gram.view((0, 0), (rank, rank)).into_owned();
        assert!(max_abs(&(gram - CMatrix::identity(rank, rank))) < 1e-8);
        assert!((inter_indistinguishability(&s, &s).unwrap() - p).abs() < 1e-10);
    }
}

#[test]
fn dephasing_purity_converges_with_the_grid() {
    let spec = EmitterSpec::ideal(1.0).with_dephasing(0.5);
    let p = |n: usize| purity(&dephasing_kernel(&spec, &make_grid(n, 0.0, 12.0).unwrap()).unwrap());
    let (a, b, c) = (p(128), p(256), p(512));
    let exact = 0.5;
    assert!((c - exact).abs() < (b - exact).abs() && (b - exact).abs() < (a - exact).abs());
    // successive differences shrink at least as fast as first order
    let ratio = (a - b).abs() / (b - c).abs();
    assert!(ratio > 1.9, "ratio {ratio}");
}

#[test]
fn container_rejects_truncation() {
    let grid = make_grid(4, 0.0, 1.0).unwrap();
    let s = random_state(grid, 2, &mut rng(1));
    let mut bytes = Vec::new();
    write_state(&s, &mut bytes).unwrap();
    assert!(read_state(&bytes[..bytes.len() - 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn container_round_trips_bit_exactly(n in 2usize..20, seed in any::<u64>(), freq in any::<bool>()) {
        let grid = make_grid(n, -1.0, 2.0).unwrap();
        let mut s = random_state(grid, 1 + (seed % 3) as usize, &mut rng(seed));
        if freq {
            s = to_frequency(&s).unwrap();
        }
        let mut bytes = Vec::new();
        write_state(&s, &mut bytes).unwrap();
        let back = read_state(&bytes[..]).unwrap();
        prop_assert_eq!(back, s);
    }
}
