mod common;

use common::*;
use num_complex::Complex64;
use qbuffer::emitters::*;
use qbuffer::linalg::CMatrix;
use qbuffer::modespace::*;
use qbuffer::Error;

#[test]
fn coherent_emitter_is_pure() {
    let grid = make_grid(512, 0.0, 12.0).unwrap();
    let s = dephasing_kernel(&EmitterSpec::ideal(1.0), &grid).unwrap();
    assert!((purity(&s) - 1.0).abs() < 1e-6);
}

#[test]
fn dephasing_purity_matches_closed_form() {
    let grid = make_grid(512, 0.0, 12.0).unwrap();
    for gamma_star in [0.0, 0.5, 2.0] {
        let s = dephasing_kernel(&EmitterSpec::ideal(1.0).with_dephasing(gamma_star), &grid).unwrap();
        let expected = 1.0 / (1.0 + 2.0 * gamma_star);
        assert!((purity(&s) - expected).abs() < 1e-3, "γ* = {gamma_star}: {}", purity(&s));
    }
}

#[test]
fn carrier_offset_leaves_purity_unchanged() {
    let grid = make_grid(256, 0.0, 12.0).unwrap();
    let base = EmitterSpec::ideal(1.0).with_dephasing(0.4);
    let a = purity(&dephasing_kernel(&base, &grid).unwrap());
    let b = purity(&dephasing_kernel(&base.with_carrier(3.0), &grid).unwrap());
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn short_grids_are_rejected() {
    let grid = make_grid(64, 0.0, 2.0).unwrap();
    assert!(matches!(dephasing_kernel(&EmitterSpec::ideal(1.0), &grid), Err(Error::GridTooShort(_))));
}

#[test]
fn homogeneous_spec_reproduces_the_kernel() {
    let grid = make_grid(128, 0.0, 12.0).unwrap();
    let spec = EmitterSpec::ideal(1.0).with_dephasing(0.2);
    let a = apply_inhomogeneous(&spec, &grid, DEFAULT_QUADRATURE_POINTS).unwrap();
    let b = dephasing_kernel(&spec, &grid).unwrap();
    assert!(max_abs(&(a.rho() - b.rho())) < 1e-10);
}

#[test]
fn two_point_jitter_matches_shifted_overlap() {
    // J(τ) = ∫ψ*(t)ψ(t−τ)dt = e^{−Γτ/2} for ψ = √Γ e^{−Γt/2}
    let grid = make_grid(1401, 0.0, 14.0).unwrap();
    let s = delayed_mixture(&EmitterSpec::ideal(1.0), &grid, &[(0.0, 0.5), (1.0, 0.5)]).unwrap();
    let j2 = (-1.0f64).exp();
    assert!((purity(&s) - (1.0 + j2) / 2.0).abs() < 1e-4, "{}", purity(&s));
}

/// Kernel with spectral diffusion built entry by entry.
fn diffused_oracle(grid: &TimeGrid, gamma: f64, sigma: f64) -> f64 {
    let t = grid.points();
    let n = t.len();
    let mut k = CMatrix::from_fn(n, n, |i, j| {
        let tau = t[i] - t[j];
        Complex64::new((-gamma * (t[i] + t[j]) / 2.0 - 0.5 * sigma * sigma * tau * tau).exp(), 0.0)
    });
    let tr: f64 = (0..n).map(|i| k[(i, i)].re).sum();
    k.unscale_mut(tr);
    k.iter().map(|z| z.norm_sqr()).sum()
}

#[test]
fn spectral_diffusion_lowers_purity_monotonically() {
    let grid = make_grid(256, 0.0, 12.0).unwrap();
    let mut last = f64::INFINITY;
    for f in [0.0, 0.5, 1.0, 2.0] {
        let s = apply_inhomogeneous(&EmitterSpec::ideal(1.0).with_diffusion(f), &grid, 8).unwrap();
        let p = purity(&s);
        assert!((p - diffused_oracle(&grid, 1.0, f)).abs() < 1e-8);
        assert!(p < last);
        last = p;
    }
}

#[test]
fn inhomogeneous_averaging_never_raises_purity() {
    let grid = make_grid(192, 0.0, 16.0).unwrap();
    for (gs, sd, jitter) in [
        (0.0, 0.0, Jitter::exponential(0.5)),
        (0.3, 0.2, Jitter::exponential(1.0)),
        (0.1, 0.5, Jitter::gaussian(0.3)),
    ] {
        let base = EmitterSpec::ideal(1.0).with_dephasing(gs);
        let spec = base.with_diffusion(sd).with_jitter(jitter);
        let grid = if jitter.kind == JitterKind::Gaussian {
            make_grid(256, -3.0, 16.0).unwrap()
        } else {
            grid
        };
        let p_in = purity(&dephasing_kernel(&base, &grid).unwrap());
        let p_out = purity(&apply_inhomogeneous(&spec, &grid, DEFAULT_QUADRATURE_POINTS).unwrap());
        assert!(p_out <= p_in + 1e-9);
    }
}

#[test]
fn dominant_mode_is_the_exponential() {
    let grid = make_grid(256, 0.0, 12.0).unwrap();
    let s = dephasing_kernel(&EmitterSpec::ideal(1.0), &grid).unwrap();
    let d = eigendecompose(&s).unwrap();
    let psi = normalize_mode(&exponential(&grid, 1.0), grid.dt()).unwrap();
    assert!(inner(&d.mode(0), &psi, grid.dt()).norm_sqr() >= 0.999);
}

#[test]
fn degenerate_ensemble_is_the_specified_emitter() {
    let grid = make_grid(128, 0.0, 4.0).unwrap();
    let spec = EnsembleSpec {
        count: 1,
        seed: 9,
        gamma: ParamRange::fixed(4.0),
        gamma_star: ParamRange::fixed(0.5),
        sigma_diff: ParamRange::fixed(1.0),
        jitter_kind: JitterKind::Exponential,
        jitter_scale: ParamRange::fixed(0.1),
        omega0: ParamRange::fixed(0.0),
        b0: ParamRange::fixed(0.8),
        quadrature_points: 8,
    };
    let members = sample_ensemble(&spec, &grid).unwrap();
    assert_eq!(members.len(), 1);
    let expected = EmitterSpec::ideal(4.0)
        .with_dephasing(0.5)
        .with_diffusion(1.0)
        .with_jitter(Jitter::exponential(0.1))
        .with_brightness(0.8);
    assert_eq!(members[0].spec, expected);
    assert_eq!(members[0].state, apply_inhomogeneous(&expected, &grid, 8).unwrap());
}

#[test]
fn ensemble_draws_are_reproducible() {
    let spec = EnsembleSpec::paper_like(4.0, 1234);
    let a: Vec<EmitterSpec> = (0..16).map(|i| spec.draw(i)).collect();
    let b: Vec<EmitterSpec> = (0..16).map(|i| spec.draw(i)).collect();
    assert_eq!(a, b);
    let other = EnsembleSpec::paper_like(4.0, 1235);
    assert_ne!(a[0], other.draw(0));
}

#[test]
fn paper_like_ensemble_is_varied() {
    let grid = make_grid(256, 0.0, 3.0).unwrap();
    let members = sample_ensemble(&EnsembleSpec::paper_like(4.0, 0), &grid).unwrap();
    assert_eq!(members.len(), 16);
    let modes: Vec<Vec<Complex64>> = members
        .iter()
        .map(|m| {
            let p = purity(&m.state);
            assert!(p > 0.0 && p < 1.0);
            eigendecompose(&m.state).unwrap().mode(0)
        })
        .collect();
    let distinct = modes
        .iter()
        .any(|m| inner(m, &modes[0], grid.dt()).norm_sqr() < 0.999);
    assert!(distinct);
}
