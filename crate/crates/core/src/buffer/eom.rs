//! Two-stage integration of the buffer equations of motion.
//!
//! In the signal's co-moving frame, with `z ∈ [0, 1]` along the medium,
//!
//! ```text
//! ∂_z S(z,τ) = i k(z,τ) B(z,τ)
//! ∂_τ B(z,τ) = i k*(z,τ) S(z,τ) − i (|Ω|²/Δ) B(z,τ)
//! k(z,τ)     = √(d/|Δ|) · Ω(τ + 2T_L(z − ½))
//! ```
//!
//! `S` is integrated along `z` with a trapezoid-type Volterra sum whose
//! discrete energy balance `d/dτ Σ w|B|² = |S_in|² − |S_out|²` is exact, and
//! `B` is advanced with the implicit midpoint rule, which keeps that balance
//! exact per step. Time is divided into cells centred on the grid nodes; the
//! input is held constant over a cell and the output is the cell average.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{BufferConfig, ControlPulse};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::TimeGrid;

/// Largest `κ²·h` per substep.
const KAPPA_STEP: f64 = 0.1;
/// Largest AC-Stark phase per substep.
const STARK_STEP: f64 = 0.25;
/// Substeps per control time scale.
const RESOLUTION: f64 = 8.0;
const MAX_SUBSTEPS: usize = 10_000;

/// One read-in or read-out pass of a control pulse over the medium.
pub(crate) struct Stage<'a> {
    pulse: &'a ControlPulse,
    transit: f64,
    delta: f64,
    amp: f64,
    c: f64,
    z: Vec<f64>,
    wz: Vec<f64>,
    t0: f64,
    dt: f64,
    lo: i64,
    hi: i64,
}

/// Composite effect of one time cell on the spin wave, `B' = P B + q s`,
/// and its cell-averaged output `r·B` for zero input.
#[derive(Clone)]
pub(crate) struct CellMap {
    pub p: CMatrix,
    pub q: DVector<Complex64>,
    pub r: DVector<Complex64>,
}

struct Substep {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    plus: CMatrix,
    drive: DVector<Complex64>,
    x: DVector<Complex64>,
}

impl<'a> Stage<'a> {
    pub fn new(config: &BufferConfig, pulse: &'a ControlPulse, grid: &TimeGrid) -> Result<Self> {
        let nz = config.n_z;
        let h = 1.0 / (nz - 1) as f64;
        let z: Vec<f64> = (0..nz).map(|i| i as f64 * h).collect();
        let mut wz = vec![h; nz];
        wz[0] *= 0.5;
        wz[nz - 1] *= 0.5;
        let amp = pulse.amplitude(config);
        let dt = grid.dt();
        let (s0, s1) = pulse.shape.support();
        let (a, b) = (s0 - config.transit_time, s1 + config.transit_time);
        let lo = ((a - grid.t_start()) / dt - 0.5).ceil() as i64;
        let hi = ((b - grid.t_start()) / dt + 0.5).floor() as i64;
        let spread = 2.0 * config.transit_time * h;
        if amp > 0.0 && spread > 0.5 * pulse.shape.time_scale() {
            return Err(Error::GridTooCoarse(format!(
                "n_z = {nz} leaves {spread:.3e} ns of control delay between slices; \
                 the control varies on {:.3e} ns",
                pulse.shape.time_scale()
            )));
        }
        Ok(Self {
            pulse,
            transit: config.transit_time,
            delta: config.delta,
            amp,
            c: (config.coupling / config.delta.abs()).sqrt(),
            z,
            wz,
            t0: grid.t_start(),
            dt,
            lo,
            hi,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.wz
    }

    /// First and last cell touched by the control (may lie off the grid).
    pub fn active_cells(&self) -> Option<(i64, i64)> {
        (self.amp > 0.0 && self.lo <= self.hi).then_some((self.lo, self.hi))
    }

    pub fn is_coupled(&self, j: i64) -> bool {
        self.amp > 0.0 && j >= self.lo && j <= self.hi
    }

    fn center(&self, j: i64) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    fn substeps(&self, j: i64) -> Result<usize> {
        let tc = self.center(j);
        let peak = self.amp
            * self.amp
            * self
                .pulse
                .shape
                .peak_in(tc - 0.5 * self.dt - self.transit, tc + 0.5 * self.dt + self.transit);
        let kappa2 = self.c * self.c * peak;
        let by_kappa = kappa2 * self.dt / KAPPA_STEP;
        let by_stark = peak / self.delta.abs() * self.dt / STARK_STEP;
        let by_shape = self.dt * RESOLUTION / self.pulse.shape.time_scale();
        let n = by_kappa.max(by_stark).max(by_shape).ceil().max(1.0);
        if n > MAX_SUBSTEPS as f64 {
            return Err(Error::GridTooCoarse(format!(
                "cell at t = {tc:.4} ns needs {n:.0} substeps (limit {MAX_SUBSTEPS})"
            )));
        }
        Ok(n as usize)
    }

    fn substep(&self, tm: f64, hs: f64) -> Substep {
        let nz = self.z.len();
        let k: Vec<Complex64> = self
            .z
            .iter()
            .map(|&z| self.pulse.shape.value(tm + 2.0 * self.transit * (z - 0.5)) * (self.c * self.amp))
            .collect();
        let x: Vec<Complex64> = k.iter().zip(&self.wz).map(|(k, w)| k * w).collect();
        let i = Complex64::i();
        let mut a = CMatrix::zeros(nz, nz);
        for r in 0..nz {
            let kc = k[r].conj();
            for c in 0..r {
                a[(r, c)] = -kc * x[c];
            }
            let stark = k[r].norm_sqr() / (self.c * self.c * self.delta);
            a[(r, r)] = -kc * x[r] * 0.5 - i * stark;
        }
        let half = Complex64::new(0.5 * hs, 0.0);
        let id = CMatrix::identity(nz, nz);
        let minus = &id - &a * half;
        let plus = &id + &a * half;
        Substep {
            lu: minus.lu(),
            plus,
            drive: DVector::from_iterator(nz, k.iter().map(|k| i * k.conj() * hs)),
            x: DVector::from_vec(x),
        }
    }

    /// Advances the stacked states `X` (columns) over cell `j` with input
    /// coefficients `sv` (one per column); returns the cell-averaged output
    /// coefficients.
    fn advance(&self, j: i64, xs: &mut CMatrix, sv: &[Complex64]) -> Result<Vec<Complex64>> {
        let ns = self.substeps(j)?;
        let hs = self.dt / ns as f64;
        let start = self.center(j) - 0.5 * self.dt;
        let m = xs.ncols();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        let inv = 1.0 / ns as f64;
        let i = Complex64::i();
        for q in 0..ns {
            let st = self.substep(start + (q as f64 + 0.5) * hs, hs);
            let mut rhs = &st.plus * &*xs;
            for (c, s) in sv.iter().enumerate() {
                if *s != Complex64::new(0.0, 0.0) {
                    let mut col = rhs.column_mut(c);
                    col.axpy(*s, &st.drive, Complex64::new(1.0, 0.0));
                }
            }
            let next = st.lu.solve(&rhs).expect("midpoint matrix is non-singular");
            for c in 0..m {
                let mid = (xs.column(c) + next.column(c)) * Complex64::new(0.5, 0.0);
                out[c] += (sv[c] + i * st.x.dot(&mid)) * inv;
            }
            *xs = next;
        }
        Ok(out)
    }

    pub fn cell_map(&self, j: i64) -> Result<Option<CellMap>> {
        if !self.is_coupled(j) {
            return Ok(None);
        }
        let nz = self.z.len();
        let mut xs = CMatrix::zeros(nz, nz + 1);
        xs.view_mut((0, 0), (nz, nz)).fill_with_identity();
        let mut sv = vec![Complex64::new(0.0, 0.0); nz + 1];
        sv[nz] = Complex64::new(1.0, 0.0);
        let y = self.advance(j, &mut xs, &sv)?;
        Ok(Some(CellMap {
            p: xs.columns(0, nz).into_owned(),
            q: xs.column(nz).into_owned(),
            r: DVector::from_vec(y[..nz].to_vec()),
        }))
    }

    /// Maps for cells `from..=to`, built in parallel, returned in order.
    pub fn cell_maps(&self, from: i64, to: i64) -> Result<Vec<Option<CellMap>>> {
        if to < from {
            return Ok(Vec::new());
        }
        (from..=to).into_par_iter().map(|j| self.cell_map(j)).collect()
    }

    /// Advances a single spin wave `b` over cell `j` with input `s`.
    pub fn step(&self, j: i64, b: &mut DVector<Complex64>, s: Complex64) -> Result<Complex64> {
        if !self.is_coupled(j) {
            return Ok(s);
        }
        let mut xs = CMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let y = self.advance(j, &mut xs, &[s])?;
        b.copy_from(&xs.column(0));
        Ok(y[0])
    }
}

/// Outcome of propagating one signal envelope through the buffer.
#[derive(Debug, Clone)]
pub struct EomSolution {
    /// Retrieved field on the grid, in the frame delayed by the storage time.
    pub s_out: Vec<Complex64>,
    /// Field leaving the medium during read-in (not retrieved).
    pub transmitted: Vec<Complex64>,
    /// Spin wave `B(z)` at the end of storage, after decay.
    pub stored: Vec<Complex64>,
    /// Spin wave left behind after read-out.
    pub spin_wave_final: Vec<Complex64>,
    /// Longitudinal positions of the spin-wave samples.
    pub z: Vec<f64>,
}

pub(crate) fn check_windows(config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse) -> Result<()> {
    if read_in.energy_pj == 0.0 || read_out.energy_pj == 0.0 {
        return Ok(());
    }
    let end_in = read_in.shape.support().1 + config.transit_time;
    let start_out = read_out.shape.support().0 - config.transit_time + config.buffer_delay;
    if end_in > start_out {
        return Err(Error::OverlappingWindows(format!(
            "read-in control ends at {end_in:.4} ns, read-out starts at {start_out:.4} ns"
        )));
    }
    Ok(())
}

pub(crate) fn validate_inputs(config: &BufferConfig, read_in: &ControlPulse, read_out: &ControlPulse) -> Result<()> {
    config.validate()?;
    read_in.validate("read_in")?;
    read_out.validate("read_out")?;
    check_windows(config, read_in, read_out)
}

/// Propagates `s_in` (sampled on `grid`) through read-in, storage and
/// read-out by direct time marching.
pub fn solve_eom(
    config: &BufferConfig,
    read_in: &ControlPulse,
    read_out: &ControlPulse,
    grid: &TimeGrid,
    s_in: &[Complex64],
) -> Result<EomSolution> {
    validate_inputs(config, read_in, read_out)?;
    let n = grid.len();
    if s_in.len() != n {
        return Err(Error::InvalidArgument(format!("signal has {} samples, grid has {n}", s_in.len())));
    }
    let stage_in = Stage::new(config, read_in, grid)?;
    let stage_out = Stage::new(config, read_out, grid)?;
    let nz = config.n_z;
    let zero = Complex64::new(0.0, 0.0);

    let mut b = DVector::from_element(nz, zero);
    let mut transmitted = vec![zero; n];
    let last_in = stage_in.active_cells().map_or(n as i64 - 1, |(_, hi)| hi.max(n as i64 - 1));
    for j in 0..=last_in {
        let s = if (j as usize) < n { s_in[j as usize] } else { zero };
        let y = stage_in.step(j, &mut b, s)?;
        if (j as usize) < n {
            transmitted[j as usize] = y;
        }
    }
    b *= Complex64::new(config.storage_factor(), 0.0);
    let stored: Vec<Complex64> = b.iter().copied().collect();

    let mut s_out = vec![zero; n];
    if let Some((lo, hi)) = stage_out.active_cells() {
        for j in lo.min(0)..=hi.min(n as i64 - 1) {
            let y = stage_out.step(j, &mut b, zero)?;
            if j >= 0 {
                s_out[j as usize] = y;
            }
        }
    }
    Ok(EomSolution {
        s_out,
        transmitted,
        stored,
        spin_wave_final: b.iter().copied().collect(),
        z: stage_in.z.clone(),
    })
}

/// Stored spin wave (in `√w`-weighted coordinates, before decay) per unit
/// amplitude at each grid node: an `n_z × n` matrix.
pub(crate) fn read_in_operator(stage: &Stage, n: usize, dt: f64) -> Result<CMatrix> {
    let nz = stage.weights().len();
    let mut t = CMatrix::zeros(nz, n);
    let Some((_, hi)) = stage.active_cells() else {
        return Ok(t);
    };
    let last = hi.max(n as i64 - 1);
    let maps = stage.cell_maps(0, last)?;
    let mut phi = CMatrix::identity(nz, nz);
    let unit = 1.0 / dt.sqrt();
    for j in (0..=last).rev() {
        if let Some(m) = &maps[j as usize] {
            if (j as usize) < n {
                t.set_column(j as usize, &(&phi * &m.q * Complex64::new(unit, 0.0)));
            }
            phi = &phi * &m.p;
        }
    }
    for (r, w) in stage.weights().iter().enumerate() {
        t.row_mut(r).scale_mut(w.sqrt());
    }
    Ok(t)
}

/// Output amplitude on each grid node per unit `√w`-weighted spin wave:
/// an `n × n_z` matrix.
pub(crate) fn read_out_operator(stage: &Stage, n: usize, dt: f64) -> Result<CMatrix> {
    let nz = stage.weights().len();
    let mut r = CMatrix::zeros(n, nz);
    let Some((lo, hi)) = stage.active_cells() else {
        return Ok(r);
    };
    let (from, to) = (lo.min(0), hi.min(n as i64 - 1));
    if to < 0 {
        return Ok(r);
    }
    let maps = stage.cell_maps(from, to)?;
    let mut psi = CMatrix::identity(nz, nz);
    let amp = dt.sqrt();
    for (offset, m) in maps.iter().enumerate() {
        let j = from + offset as i64;
        if let Some(m) = m {
            if j >= 0 {
                let row = psi.tr_mul(&m.r).transpose() * Complex64::new(amp, 0.0);
                r.set_row(j as usize, &row);
            }
            psi = &m.p * &psi;
        }
    }
    for (c, w) in stage.weights().iter().enumerate() {
        r.column_mut(c).unscale_mut(w.sqrt());
    }
    Ok(r)
}
