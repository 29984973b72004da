use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{BufferConfig, ControlPulse, PulseShape, PAPER_DELAY, PAPER_PULSE_WIDTH};
use super::eom::check_windows;
use super::green::{read_in_factor, read_out_factor};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::{make_grid, TimeGrid};

/// Total efficiency `‖s_out‖²/‖s_in‖²` for every (read-in, read-out) energy
/// pair; rows follow `read_in_energies`.
pub fn efficiency_surface(
    config: &BufferConfig,
    read_in: &PulseShape,
    read_out: &PulseShape,
    read_in_energies: &[f64],
    read_out_energies: &[f64],
    grid: &TimeGrid,
    probe: &[Complex64],
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if probe.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "probe has {} samples, grid has {}",
            probe.len(),
            grid.len()
        )));
    }
    for (name, list) in [("read_in_energies", read_in_energies), ("read_out_energies", read_out_energies)] {
        if list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::validation(name, "energies must be non-negative"));
        }
    }
    let norm = probe.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroTrace(0.0));
    }
    let a = nalgebra::DVector::from_iterator(probe.len(), probe.iter().map(|z| z / norm));

    let stored: Vec<nalgebra::DVector<Complex64>> = read_in_energies
        .par_iter()
        .map(|&e| read_in_factor(config, &ControlPulse::new(read_in.clone(), e), grid).map(|t| t * &a))
        .collect::<Result<_>>()?;
    let readouts: Vec<CMatrix> = read_out_energies
        .par_iter()
        .map(|&e| read_out_factor(config, &ControlPulse::new(read_out.clone(), e), grid))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(read_in_energies.len());
    for (b, &ein) in stored.iter().zip(read_in_energies) {
        let mut row = Vec::with_capacity(read_out_energies.len());
        for (r, &eout) in readouts.iter().zip(read_out_energies) {
            check_windows(
                config,
                &ControlPulse::new(read_in.clone(), ein),
                &ControlPulse::new(read_out.clone(), eout),
            )?;
            row.push((r * b).norm_squared());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Probe, pulses and energies of the efficiency-surface experiment:
/// 1.5 GHz transform-limited signal and controls, read-in at 700 and
/// 1310 pJ, read-out swept up to 3 nJ.
#[derive(Debug, Clone)]
pub struct SurfaceSetup {
    pub grid: TimeGrid,
    pub probe: Vec<Complex64>,
    pub read_in: PulseShape,
    pub read_out: PulseShape,
    pub read_in_energies: Vec<f64>,
    pub read_out_energies: Vec<f64>,
}

pub const ANCHOR_ENERGY_PJ: f64 = 700.0;
pub const ANCHOR_EFFICIENCY: f64 = 0.10;

impl SurfaceSetup {
    pub fn paper_like(n_points: usize) -> Result<Self> {
        Ok(Self::on_grid(make_grid(n_points, -1.0, 2.0)?))
    }

    /// The same experiment sampled on `grid`; the probe peaks at `t = 0`.
    pub fn on_grid(grid: TimeGrid) -> Self {
        let w = PAPER_PULSE_WIDTH;
        let probe = grid
            .points()
            .iter()
            .map(|&t| Complex64::new((-t * t / (2.0 * w * w)).exp(), 0.0))
            .collect();
        Self {
            grid,
            probe,
            read_in: PulseShape::gaussian(0.0, w),
            read_out: PulseShape::gaussian(0.0, w),
            read_in_energies: vec![ANCHOR_ENERGY_PJ, 1310.0],
            read_out_energies: (0..=30).map(|k| 100.0 * k as f64).collect(),
        }
    }

    pub fn efficiency(&self, config: &BufferConfig, read_in_pj: f64, read_out_pj: f64) -> Result<f64> {
        let rows = efficiency_surface(config, &self.read_in, &self.read_out, &[read_in_pj], &[read_out_pj], &self.grid, &self.probe)?;
        Ok(rows[0][0])
    }

    pub fn surface(&self, config: &BufferConfig) -> Result<Vec<Vec<f64>>> {
        efficiency_surface(
            config,
            &self.read_in,
            &self.read_out,
            &self.read_in_energies,
            &self.read_out_energies,
            &self.grid,
            &self.probe,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// `∫|Ω|²dt` per pJ.
    pub energy_scale: f64,
    /// Storage decay rate giving the anchor efficiency, 1/ns.
    pub gamma_b: f64,
    /// Anchor efficiency without storage decay.
    pub anchor_without_decay: f64,
}

/// Fits the energy scale and storage decay of the paper-like buffer.
///
/// The energy scale puts equal 700 pJ read-in and read-out pulses at the
/// first efficiency maximum along the equal-energy diagonal; the decay rate
/// then brings that anchor point down to 10 % after 5.5 ns of storage.
pub fn calibrate_paper_like(template: &BufferConfig, setup: &SurfaceSetup) -> Result<Calibration> {
    let mut cfg = *template;
    cfg.gamma_b = 0.0;
    cfg.energy_scale = 1.0;
    cfg.buffer_delay = PAPER_DELAY;
    let eta = |e: f64| setup.efficiency(&cfg, e, e);

    // coarse scan for the first local maximum
    let scan: Vec<f64> = (0..=70).map(|k| 1.12f64.powi(k)).collect();
    let values: Vec<f64> = scan.iter().map(|&e| eta(e)).collect::<Result<_>>()?;
    let peak = (1..values.len() - 1)
        .find(|&k| values[k] >= values[k - 1] && values[k] >= values[k + 1])
        .ok_or_else(|| Error::InvalidArgument("no efficiency maximum in the scanned energy range".into()))?;
    let (mut a, mut b) = (scan[peak - 1], scan[peak + 1]);

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (eta(c)?, eta(d)?);
    while b - a > 1e-6 * b {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eta(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eta(d)?;
        }
    }
    let best = 0.5 * (a + b);
    let eta0 = eta(best)?;
    Ok(Calibration {
        energy_scale: best / ANCHOR_ENERGY_PJ,
        gamma_b: (eta0 / ANCHOR_EFFICIENCY).ln() / (2.0 * PAPER_DELAY),
        anchor_without_decay: eta0,
    })
}
