//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use qbuffer::buffer::config::PAPER_PULSE_WIDTH;
use qbuffer::buffer::*;
use qbuffer::emitters::*;
use qbuffer::filters::*;
use qbuffer::harness::{run_scenario, run_to_dir, with_threads, Scenario};
use qbuffer::linalg::CMatrix;
use qbuffer::modespace::*;
use qbuffer::optimize::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(n: usize, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let mut o = f();
    let took = t.elapsed();
    if let Some(l) = limit {
        if took > l {
            o.pass = false;
            o.detail.push_str(&format!("; over the {} s limit", l.as_secs()));
        }
    }
    println!(
        "criterion {n:>2}: {} ({:.1} s) {}",
        if o.pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        o.detail
    );
    o.pass
}

fn dephasing_oracle() -> Outcome {
    let grid = make_grid(512, 0.0, 12.0).unwrap();
    let mut worst: f64 = 0.0;
    for gamma_star in [0.0, 0.5, 2.0] {
        let s = dephasing_kernel(&EmitterSpec::ideal(1.0).with_dephasing(gamma_star), &grid).unwrap();
        worst = worst.max((purity(&s) - 1.0 / (1.0 + 2.0 * gamma_star)).abs());
    }
    Outcome {
        pass: worst <= 1e-3,
        detail: format!("max |purity - Γ/(Γ+2γ*)| = {worst:.2e}"),
    }
}

fn eigenmode_sum(g: &GreenOperator, s: &ModeState) -> (CMatrix, f64) {
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

fn output_state_oracle() -> Outcome {
    let grid = make_grid(32, 0.0, 2.0).unwrap();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let s = random_state(grid, 1 + k % 8, &mut r);
        let m = random_matrix(32, 32, &mut r);
        let top = qbuffer::linalg::svd(&m).0[0] * r.gen_range(1.0..3.0);
        let g = GreenOperator::from_matrix(grid, m.unscale(top)).unwrap();
        let (out, w) = buffer_output_state(&g, &s).unwrap();
        let (oracle, w_oracle) = eigenmode_sum(&g, &s);
        worst = worst.max((w - w_oracle).abs()).max(max_abs(&(out.rho() - oracle)));
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("max deviation from the eigenmode sum {worst:.2e}"),
    }
}

fn ideal_filter_law() -> Outcome {
    let grid = make_grid(48, 0.0, 3.0).unwrap();
    let mut r = rng(3);
    let (mut dp, mut db): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let s = random_state(grid, 1 + k % 6, &mut r);
        let (out, b) = ideal_buffer_filter(&s, None).unwrap();
        dp = dp.max((purity(&out) - 1.0).abs());
        db = db.max((b - eigendecompose(&s).unwrap().weights[0]).abs());
    }
    Outcome {
        pass: dp <= 1e-8 && db <= 1e-10,
        detail: format!("max |purity - 1| {dp:.2e}, max |b - α₀| {db:.2e}"),
    }
}

fn passivity() -> Outcome {
    let grid = make_grid(256, -1.0, 2.0).unwrap();
    let mut r = rng(4);
    let (mut top, mut ortho, mut lin): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let mut cfg = BufferConfig::paper_like();
        cfg.coupling = r.gen_range(0.2..3.0);
        cfg.gamma_b = r.gen_range(0.0..0.3);
        let width = r.gen_range(0.14..0.3);
        let pin = ControlPulse::new(
            PulseShape::Gaussian { center: r.gen_range(-0.1..0.1), width, chirp: r.gen_range(-3.0..3.0) },
            r.gen_range(100.0..3000.0),
        );
        let pout = ControlPulse::gaussian(r.gen_range(-0.1..0.1), r.gen_range(0.14..0.3), r.gen_range(100.0..3000.0));
        let g = green_function(&cfg, &pin, &pout, &grid).unwrap();
        top = top.max(g.singular_values()[0]);
        ortho = ortho.max(g.orthonormality_residual());
        lin = lin.max(g.linearity_residual().unwrap());
    }
    Outcome {
        pass: top <= 1.0 + 1e-6 && ortho <= 1e-8 && lin <= 1e-8,
        detail: format!("max λ {top:.6}, orthonormality {ortho:.2e}, linearity {lin:.2e}"),
    }
}

fn interior_max(row: &[f64]) -> bool {
    let (k, max) = row.iter().enumerate().fold((0, f64::MIN), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
    k > 0 && k + 1 < row.len() && row[row.len() - 1] < max
}

fn efficiency_surface_shape() -> Outcome {
    let setup = SurfaceSetup::paper_like(256).unwrap();
    let cfg = BufferConfig::paper_like();
    let rows = setup.surface(&cfg).unwrap();
    let rollover = rows.len() == 2 && rows.iter().all(|r| interior_max(r));
    let anchor = setup.efficiency(&cfg, ANCHOR_ENERGY_PJ, ANCHOR_ENERGY_PJ).unwrap();
    let lossless = setup.surface(&cfg.without_decay()).unwrap();
    let best = lossless.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    Outcome {
        pass: rollover && (anchor - 0.10).abs() <= 0.02 && (0.24..=0.44).contains(&best),
        detail: format!("interior maxima {rollover}, anchor η {anchor:.4}, lossless optimum {best:.4}"),
    }
}

fn default_ensemble() -> Vec<EnsembleMember> {
    let grid = make_grid(256, 0.0, 3.0).unwrap();
    sample_ensemble(&EnsembleSpec::paper_like(4.0, 0), &grid).unwrap()
}

fn intensity_asymptote() -> Outcome {
    let mut failures = Vec::new();
    let mut bright_pure = 0;
    let mut mixed = 0;
    for m in default_ensemble() {
        let f = filter_sweep(&m.state, &PassbandFamily::default()).unwrap();
        if f.input_purity > 1.0 - 1e-6 {
            continue;
        }
        mixed += 1;
        let profile = f.width_profile();
        let narrow = profile[0];
        let wide = *profile
            .iter()
            .min_by(|a, b| (a.0 - 4.0 * narrow.0).abs().partial_cmp(&(b.0 - 4.0 * narrow.0).abs()).unwrap())
            .unwrap();
        if !(narrow.2 > wide.2 && narrow.1 < wide.1) {
            failures.push(m.index);
        }
        if f.input_purity <= 0.8 && f.points.iter().any(|p| p.purity >= 0.999 && p.b_mult >= 0.05) {
            bright_pure += 1;
        }
    }
    Outcome {
        pass: failures.is_empty() && bright_pure == 0,
        detail: format!(
            "{mixed} mixed emitters, narrow-vs-4x violations {failures:?}, bright near-pure points {bright_pure}"
        ),
    }
}

fn dominance() -> Outcome {
    let s = Scenario::from_toml("name = \"default-tradeoff\"\nkind = \"tradeoff-sweep\"\n").unwrap();
    let record = run_scenario(&s).unwrap();
    let t = record.table("tradeoff").unwrap();
    let mut undominated = 0;
    for item in &record.items {
        let id = format!("{}", item.source_id as f64);
        let o = item.optimized;
        let dominated = t.rows.iter().filter(|r| r[0] == id && r[1] == "intensity").any(|r| {
            let (b, p): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
            b >= o.b_ratio && p >= o.indist && (b > o.b_ratio || p > o.indist)
        });
        if !dominated {
            undominated += 1;
        }
    }
    Outcome {
        pass: undominated >= 14 && record.items.len() == 16,
        detail: format!("{undominated} of {} optimized points undominated", record.items.len()),
    }
}

/// Smallest-bracket root of a decreasing function by bisection.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn headline_band() -> Outcome {
    let grid = make_grid(256, 0.0, 3.5).unwrap();
    let spec = |s: f64| EmitterSpec {
        b0: 0.72,
        ..EmitterSpec::ideal(4.0).with_jitter(Jitter::exponential(s))
    };
    let i0 = |s: f64| purity(&apply_inhomogeneous(&spec(s), &grid, DEFAULT_QUADRATURE_POINTS).unwrap());
    let scale = bisect(i0, 0.70, 0.0, 0.5);
    let toml = format!(
        "name = \"headline\"\nkind = \"single-run\"\n[grid]\nn_points = 256\nt_start = 0.0\nt_end = 3.5\n\
         [[emitters]]\ngamma = 4.0\nb0 = 0.72\njitter = {{ kind = \"exponential\", scale = {scale} }}\n\
         [optimization]\nbudget = 400\n"
    );
    let record = run_scenario(&Scenario::from_toml(&toml).unwrap()).unwrap();
    let item = &record.items[0];
    let (g, o) = (item.gaussian, item.optimized);
    let gain = o.b_ratio / g.b_ratio - 1.0;
    let pass = (item.input_purity - 0.70).abs() <= 0.02
        && g.indist >= 0.95
        && (0.30..=0.50).contains(&g.b_ratio)
        && o.indist >= g.indist - 1e-4
        && gain >= 0.25;
    Outcome {
        pass,
        detail: format!(
            "jitter {scale:.5} ns, I0 {:.4}; gaussian B/B0 {:.4} I {:.4}; optimized B/B0 {:.4} I {:.4} ({:+.1}%)",
            item.input_purity,
            g.b_ratio,
            g.indist,
            o.b_ratio,
            o.indist,
            100.0 * gain
        ),
    }
}

fn unification() -> Outcome {
    let grid = make_grid(256, 0.0, 7.0).unwrap();
    let state = |gamma: f64, s: f64| {
        apply_inhomogeneous(&EmitterSpec::ideal(gamma).with_jitter(Jitter::exponential(s)), &grid, DEFAULT_QUADRATURE_POINTS)
            .unwrap()
    };
    let i2 = |s: f64| inter_indistinguishability(&state(4.0, s), &state(2.0, s)).unwrap();
    let scale = bisect(i2, 0.62, 0.0, 0.5);
    let (a, b) = (state(4.0, scale), state(2.0, scale));
    let start = ControlPulse::gaussian(0.35, PAPER_PULSE_WIDTH, ANCHOR_ENERGY_PJ);
    let problem = OptimizationProblem::new(
        Objective::Unification { purity_floor: 0.95, brightness_floor: 0.5 },
        start.clone(),
        start,
        800,
        3,
    );
    let cfg = BufferConfig::paper_like().without_decay();
    let r = optimize_unification(&problem, &cfg, &cfg, &a, &b).unwrap();
    let (before, after) = (r.i2_before.unwrap(), r.i2_after.unwrap());
    Outcome {
        pass: (before - 0.62).abs() <= 0.05 && after >= 0.90,
        detail: format!(
            "common jitter {scale:.5} ns; I2 {before:.4} -> {after:.4}; B/B0 {:.3}, {:.3}",
            r.metrics[0].b_ratio, r.metrics[1].b_ratio
        ),
    }
}

fn csv_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let scenarios = [
        "name = \"s\"\nkind = \"efficiency-surface\"\n[grid]\nn_points = 128\n".to_string(),
        "name = \"t\"\nkind = \"tradeoff-sweep\"\nseed = 5\n[grid]\nn_points = 96\n\
         [ensemble]\ncount = 3\nseed = 5\ngamma = { min = 4.0, max = 4.0 }\ngamma_star = { min = 0.0, max = 1.2 }\n\
         sigma_diff = { min = 0.0, max = 4.0 }\njitter_kind = \"exponential\"\njitter_scale = { min = 0.0, max = 0.25 }\n\
         omega0 = { min = 0.0, max = 0.0 }\nb0 = { min = 1.0, max = 1.0 }\nquadrature_points = 12\n\
         [optimization]\nbudget = 20\n"
            .to_string(),
    ];
    let mut files = 0;
    let mut identical = true;
    for text in scenarios {
        let s = Scenario::from_toml(&text).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        with_threads(1, || run_to_dir(&s, a.path())).unwrap().unwrap();
        with_threads(4, || run_to_dir(&s, b.path())).unwrap().unwrap();
        let (x, y) = (csv_bytes(a.path()), csv_bytes(b.path()));
        files += x.len();
        identical &= !x.is_empty() && x == y;
    }
    Outcome {
        pass: identical,
        detail: format!("{files} CSV files compared between 1 and 4 threads"),
    }
}

#[test]
fn acceptance() {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let results = [
        check(1, Some(Duration::from_secs(10)), dephasing_oracle),
        check(2, Some(Duration::from_secs(30)), output_state_oracle),
        check(3, None, ideal_filter_law),
        check(4, minutes(2), passivity),
        check(5, None, efficiency_surface_shape),
        check(6, None, intensity_asymptote),
        check(7, minutes(30), dominance),
        check(8, None, headline_band),
        check(9, minutes(15), unification),
        check(10, None, determinism),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, &p)| !p).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
