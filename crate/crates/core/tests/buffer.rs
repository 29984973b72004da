mod common;

use common::*;
use num_complex::Complex64;
use qbuffer::buffer::*;
use qbuffer::linalg::CMatrix;
use qbuffer::modespace::*;
use qbuffer::Error;

fn setup_grid() -> TimeGrid {
    make_grid(256, -1.0, 2.0).unwrap()
}

fn pulse(energy: f64) -> ControlPulse {
    ControlPulse::gaussian(0.0, 0.177, energy)
}

fn energy(v: &[Complex64], dt: f64) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt
}

#[test]
fn zero_control_retrieves_nothing() {
    let grid = setup_grid();
    let cfg = BufferConfig::paper_like();
    let g = green_function(&cfg, &pulse(0.0), &pulse(0.0), &grid).unwrap();
    assert_eq!(max_abs(g.matrix()), 0.0);
    let g = green_function(&cfg, &pulse(700.0), &pulse(0.0), &grid).unwrap();
    assert_eq!(max_abs(g.matrix()), 0.0);
    let probe = gaussian(&grid, 0.0, 0.177);
    let sol = solve_eom(&cfg, &pulse(0.0), &pulse(700.0), &grid, &probe).unwrap();
    assert!(sol.s_out.iter().all(|z| z.norm() == 0.0));
    assert_eq!(sol.transmitted, probe);
}

#[test]
fn fast_storage_decay_erases_the_memory() {
    let setup = SurfaceSetup::paper_like(256).unwrap();
    let mut cfg = BufferConfig::paper_like();
    cfg.gamma_b = 1e3;
    assert!(setup.efficiency(&cfg, 700.0, 700.0).unwrap() < 1e-12);
}

#[test]
fn storage_decay_is_exponential() {
    let setup = SurfaceSetup::paper_like(256).unwrap();
    let base = BufferConfig::paper_like().without_decay();
    let eta0 = setup.efficiency(&base, 700.0, 900.0).unwrap();
    for (g, t) in [(0.1, 5.5), (0.4, 3.0), (0.05, 4.0)] {
        let mut cfg = base;
        cfg.gamma_b = g;
        cfg.buffer_delay = t;
        let eta = setup.efficiency(&cfg, 700.0, 900.0).unwrap();
        let mut undecayed = base;
        undecayed.buffer_delay = t;
        let expected = (-2.0 * g * t).exp() * setup.efficiency(&undecayed, 700.0, 900.0).unwrap();
        assert!((eta - expected).abs() < 1e-6 * expected.max(1e-3));
    }
    assert!(eta0 > 0.0);
}

/// First-order stored spin wave: `B(z) = i∫k*(z,τ) S(τ) e^{−i∫_τ^∞|Ω|²/Δ} dτ`,
/// with the input held constant over each grid cell.
fn weak_coupling_oracle(cfg: &BufferConfig, p: &ControlPulse, grid: &TimeGrid, s: &[Complex64]) -> f64 {
    let nz = cfg.n_z;
    let h = 1.0 / (nz - 1) as f64;
    let c = (cfg.coupling / cfg.delta.abs()).sqrt();
    let sub = 40;
    let dt = grid.dt();
    let tau = dt / sub as f64;
    let mut stored = 0.0;
    for iz in 0..nz {
        let z = iz as f64 * h;
        let lag = 2.0 * cfg.transit_time * (z - 0.5);
        // march forward: B' = −i(|Ω|²/Δ)B + i k* S, exact phase per substep
        let mut b = Complex64::new(0.0, 0.0);
        for (j, sj) in s.iter().enumerate() {
            let start = grid.point(j) - 0.5 * dt;
            for q in 0..sub {
                let t = start + (q as f64 + 0.5) * tau;
                let om = p.rabi(cfg, t + lag);
                let rot = Complex64::from_polar(1.0, -om.norm_sqr() / cfg.delta * tau);
                b = b * rot + Complex64::i() * c * om.conj() * sj * tau * rot.sqrt();
            }
        }
        let w = if iz == 0 || iz == nz - 1 { 0.5 * h } else { h };
        stored += w * b.norm_sqr();
    }
    stored / energy(s, dt)
}

#[test]
fn weak_coupling_storage_matches_perturbation_theory() {
    let grid = setup_grid();
    let probe = gaussian(&grid, 0.0, 0.177);
    let mut cfg = BufferConfig::paper_like().without_decay();
    let p = pulse(700.0);
    let stored = |cfg: &BufferConfig| {
        let sol = solve_eom(cfg, &p, &pulse(0.0), &grid, &probe).unwrap();
        let h = 1.0 / (cfg.n_z - 1) as f64;
        let e: f64 = sol
            .stored
            .iter()
            .enumerate()
            .map(|(i, b)| b.norm_sqr() * if i == 0 || i == cfg.n_z - 1 { 0.5 * h } else { h })
            .sum();
        e / energy(&probe, grid.dt())
    };
    cfg.coupling = 1e-4;
    let eta1 = stored(&cfg);
    let oracle = weak_coupling_oracle(&cfg, &p, &grid, &probe);
    assert!((eta1 / oracle - 1.0).abs() < 1e-2, "{eta1} vs {oracle}");
    cfg.coupling = 2e-4;
    let eta2 = stored(&cfg);
    assert!((eta2 / eta1 - 2.0).abs() < 2e-3);
}

#[test]
fn green_operator_is_passive_and_linear() {
    let grid = make_grid(128, -1.0, 2.0).unwrap();
    let mut r = rng(4);
    for k in 0..3 {
        let mut cfg = BufferConfig::paper_like();
        cfg.coupling = 0.5 + 1.5 * k as f64;
        let g = green_function(&cfg, &pulse(400.0 + 800.0 * k as f64), &pulse(1500.0), &grid).unwrap();
        assert!(g.singular_values().iter().all(|&s| s <= 1.0 + PASSIVITY_TOL));
        assert!(g.orthonormality_residual() < 1e-8);
        assert!(g.reconstruction_residual() < 1e-8);
        assert!(g.linearity_residual().unwrap() < 1e-8);
        let s: Vec<Complex64> = (0..grid.len()).map(|_| complex(&mut r)).collect();
        let sol = solve_eom(&cfg, &pulse(400.0), &pulse(1500.0), &grid, &s).unwrap();
        assert!(energy(&sol.s_out, grid.dt()) <= energy(&s, grid.dt()) * (1.0 + 1e-6));
    }
}

#[test]
fn time_translation_shifts_the_output() {
    let grid = setup_grid();
    let dt = grid.dt();
    let cfg = BufferConfig::paper_like();
    let probe = gaussian(&grid, 0.0, 0.2);
    let base = solve_eom(&cfg, &pulse(700.0), &ControlPulse::gaussian(0.1, 0.177, 900.0), &grid, &probe).unwrap();
    let shifted_probe = gaussian(&grid, dt, 0.2);
    let shifted = solve_eom(
        &cfg,
        &ControlPulse::gaussian(dt, 0.177, 700.0),
        &ControlPulse::gaussian(0.1 + dt, 0.177, 900.0),
        &grid,
        &shifted_probe,
    )
    .unwrap();
    let peak = base.s_out.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 10..grid.len() - 10 {
        assert!((shifted.s_out[i + 1] - base.s_out[i]).norm() < 1e-6 * peak);
    }
}

#[test]
fn invalid_setups_are_rejected() {
    let grid = setup_grid();
    let mut cfg = BufferConfig::paper_like();
    cfg.buffer_delay = 0.5;
    assert!(matches!(
        green_function(&cfg, &pulse(700.0), &pulse(700.0), &grid),
        Err(Error::OverlappingWindows(_))
    ));
    let mut cfg = BufferConfig::paper_like();
    cfg.n_z = 2;
    assert!(matches!(
        green_function(&cfg, &pulse(700.0), &pulse(700.0), &grid),
        Err(Error::GridTooCoarse(_))
    ));
    let mut cfg = BufferConfig::paper_like();
    cfg.coupling = -1.0;
    match green_function(&cfg, &pulse(700.0), &pulse(700.0), &grid) {
        Err(Error::Validation { field, .. }) => assert_eq!(field, "BufferConfig.coupling"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn identity_map_returns_the_input() {
    let grid = make_grid(16, 0.0, 1.0).unwrap();
    let s = random_state(grid, 3, &mut rng(2));
    let g = GreenOperator::from_matrix(grid, CMatrix::identity(16, 16)).unwrap();
    let (out, w) = buffer_output_state(&g, &s).unwrap();
    assert!((w - 1.0).abs() < 1e-12);
    assert!(max_abs(&(out.rho() - s.rho())) < 1e-10 * max_abs(s.rho()));
}

#[test]
fn rank_one_map_on_the_dominant_mode_purifies() {
    let grid = make_grid(24, 0.0, 2.0).unwrap();
    let mut r = rng(8);
    let s = random_state(grid, 4, &mut r);
    let d = eigendecompose(&s).unwrap();
    let sq = grid.dt().sqrt();
    let u0 = nalgebra::DVector::from_vec(d.mode(0)) * Complex64::new(sq, 0.0);
    let phi: Vec<Complex64> = (0..24).map(|_| complex(&mut r)).collect();
    let phi = nalgebra::DVector::from_vec(normalize_mode(&phi, grid.dt()).unwrap()) * Complex64::new(sq, 0.0);
    let lambda = 0.8;
    let g = GreenOperator::from_matrix(grid, &phi * u0.adjoint() * Complex64::new(lambda, 0.0)).unwrap();
    let (out, w) = buffer_output_state(&g, &s).unwrap();
    assert!((purity(&out) - 1.0).abs() < 1e-8);
    assert!((w - d.dominant_weight() * lambda * lambda).abs() < 1e-12);
}

/// `Σ_k α_k |Gψ_k⟩⟨Gψ_k| / W` built mode by mode.
pub fn eigenmode_sum(g: &GreenOperator, s: &ModeState) -> (CMatrix, f64) {
    let grid = s.grid();
    let d = eigendecompose(s).unwrap();
    let n = grid.len();
    let sq = grid.dt().sqrt();
    let mut acc = CMatrix::zeros(n, n);
    let mut w = 0.0;
    for (k, &a) in d.weights.iter().enumerate() {
        let amp: Vec<Complex64> = d.mode(k).iter().map(|z| z * sq).collect();
        let v = nalgebra::DVector::from_vec(g.apply(&amp)) / Complex64::new(sq, 0.0);
        w += a * v.norm_squared() * grid.dt();
        acc += &v * v.adjoint() * Complex64::new(a, 0.0);
    }
    (acc.unscale(w), w)
}

#[test]
fn output_state_matches_eigenmode_sum() {
    let grid = make_grid(32, 0.0, 2.0).unwrap();
    let mut r = rng(31);
    for _ in 0..5 {
        let s = random_state(grid, 5, &mut r);
        let m = random_matrix(32, 32, &mut r);
        let top = qbuffer::linalg::svd(&m).0[0];
        let g = GreenOperator::from_matrix(grid, m.unscale(top)).unwrap();
        let (out, w) = buffer_output_state(&g, &s).unwrap();
        let (oracle, w_oracle) = eigenmode_sum(&g, &s);
        assert!((w - w_oracle).abs() < 1e-8);
        assert!(max_abs(&(out.rho() - oracle)) < 1e-8);
    }
}

#[test]
fn unshifted_readout_is_the_plain_operator() {
    let grid = make_grid(128, -1.0, 2.0).unwrap();
    let cfg = BufferConfig::paper_like();
    let g = green_function(&cfg, &pulse(700.0), &pulse(1310.0), &grid).unwrap();
    let s = shifted_readout(&cfg, &pulse(700.0), &pulse(1310.0), &grid, 0.0).unwrap();
    assert!(max_abs(&(s.green.matrix() - g.matrix())) <= 1e-10 * max_abs(g.matrix()));
    assert!((s.efficiency_ratio - 1.0).abs() < 1e-12);
}

fn mean_frequency(psi: &[Complex64], grid: &TimeGrid) -> f64 {
    let f = to_frequency(&ModeState::pure(*grid, Domain::Time, psi).unwrap()).unwrap();
    f.coordinates().iter().zip(f.populations()).map(|(w, p)| w * p).sum()
}

#[test]
fn shifted_readout_moves_the_output_carrier() {
    let grid = make_grid(256, -1.0, 2.0).unwrap();
    let cfg = BufferConfig::paper_like();
    let base = green_function(&cfg, &pulse(700.0), &pulse(1310.0), &grid).unwrap();
    let f0 = mean_frequency(&base.output_modes().column(0).iter().copied().collect::<Vec<_>>(), &grid);
    for dw in [-20.0, 15.0, 40.0] {
        let s = shifted_readout(&cfg, &pulse(700.0), &pulse(1310.0), &grid, dw).unwrap();
        let f = mean_frequency(&s.green.output_modes().column(0).iter().copied().collect::<Vec<_>>(), &grid);
        assert!((f - f0 - dw).abs() <= grid.d_omega(), "{dw}: {}", f - f0);
        let mirror = shifted_readout(&cfg, &pulse(700.0), &pulse(1310.0), &grid, -dw).unwrap();
        assert!((s.efficiency_ratio - mirror.efficiency_ratio).abs() < 1e-6);
    }
    let too_far = 1.01 * grid.nyquist();
    assert!(matches!(
        shifted_readout(&cfg, &pulse(700.0), &pulse(1310.0), &grid, too_far),
        Err(Error::NyquistExceeded { .. })
    ));
}

#[test]
fn green_container_round_trips() {
    let grid = make_grid(64, -1.0, 2.0).unwrap();
    let g = green_function(&BufferConfig::paper_like(), &pulse(700.0), &pulse(700.0), &grid).unwrap();
    let mut bytes = Vec::new();
    write_green(&g, &mut bytes).unwrap();
    let back = read_green(&bytes[..]).unwrap();
    assert_eq!(back.matrix(), g.matrix());
    assert_eq!(back.singular_values(), g.singular_values());
    assert_eq!(back.metadata(), g.metadata());
    assert_eq!(back.factors(), g.factors());
}

#[test]
fn efficiency_surface_shape() {
    let setup = SurfaceSetup::paper_like(256).unwrap();
    let cfg = BufferConfig::paper_like();
    let rows = setup.surface(&cfg).unwrap();
    assert_eq!(setup.read_out_energies[0], 0.0);
    for row in &rows {
        assert_eq!(row[0], 0.0);
        let (k, max) = row.iter().enumerate().fold((0, 0.0), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
        assert!(k > 0 && k + 1 < row.len() && row[row.len() - 1] < max);
    }
    let anchor = setup.efficiency(&cfg, ANCHOR_ENERGY_PJ, ANCHOR_ENERGY_PJ).unwrap();
    assert!((anchor - ANCHOR_EFFICIENCY).abs() < 1e-6);
    assert!(matches!(
        efficiency_surface(&cfg, &setup.read_in, &setup.read_out, &[-1.0], &[0.0], &setup.grid, &setup.probe),
        Err(Error::Validation { .. })
    ));
}

#[test]
fn calibration_reproduces_the_frozen_constants() {
    let setup = SurfaceSetup::paper_like(256).unwrap();
    let c = calibrate_paper_like(&BufferConfig::paper_like(), &setup).unwrap();
    assert!((c.energy_scale / qbuffer::buffer::config::PAPER_ENERGY_SCALE - 1.0).abs() < 1e-5);
    assert!((c.gamma_b / qbuffer::buffer::config::PAPER_GAMMA_B - 1.0).abs() < 1e-4);
}
