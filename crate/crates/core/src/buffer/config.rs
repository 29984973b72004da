use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::modespace::TimeGrid;

/// Half-width of the Gaussian support, in units of the width parameter.
pub const GAUSSIAN_SUPPORT: f64 = 6.0;

/// Buffer medium and geometry.
///
/// The effective coupling is `κ²(z,τ) = d·|Ω(τ + 2T_L(z−½))|²/Δ`, where the
/// control counter-propagates through the medium in transit time `T_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferConfig {
    /// Effective optical depth `d`.
    pub coupling: f64,
    /// Intermediate-state detuning Δ in rad/ns.
    pub delta: f64,
    /// Spin-wave decay rate in 1/ns; acts during storage only.
    pub gamma_b: f64,
    pub n_z: usize,
    /// Storage time between read-in and read-out, ns.
    pub buffer_delay: f64,
    /// Control transit time through the medium, ns.
    #[serde(default = "default_transit")]
    pub transit_time: f64,
    /// `∫|Ω|²dt` per picojoule of pulse energy, rad²/ns per pJ.
    pub energy_scale: f64,
}

fn default_transit() -> f64 {
    PAPER_TRANSIT_TIME
}

pub const PAPER_DETUNING: f64 = 2.0 * PI * 7.5;
pub const PAPER_DELAY: f64 = 5.5;
pub const PAPER_COUPLING: f64 = 1.3;
pub const PAPER_TRANSIT_TIME: f64 = 0.3;
/// Transform-limited 1.5 GHz pulse, rms width of `|Ω|` in ns.
pub const PAPER_PULSE_WIDTH: f64 = 0.177;

/// Frozen result of [`crate::buffer::calibrate_paper_like`].
pub const PAPER_ENERGY_SCALE: f64 = 0.110_729_562_893_401_86;
/// Frozen result of [`crate::buffer::calibrate_paper_like`].
pub const PAPER_GAMMA_B: f64 = 0.132_692_950_967_127;

impl BufferConfig {
    /// Off-resonant ladder buffer, 7.5 GHz detuning, 5.5 ns storage, with
    /// the calibrated energy scale and storage decay.
    pub fn paper_like() -> Self {
        Self {
            coupling: PAPER_COUPLING,
            delta: PAPER_DETUNING,
            gamma_b: PAPER_GAMMA_B,
            n_z: 24,
            buffer_delay: PAPER_DELAY,
            transit_time: PAPER_TRANSIT_TIME,
            energy_scale: PAPER_ENERGY_SCALE,
        }
    }

    pub fn without_decay(mut self) -> Self {
        self.gamma_b = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::validation(format!("BufferConfig.{field}"), reason))
            }
        };
        check(self.coupling.is_finite() && self.coupling > 0.0, "coupling", "must be positive")?;
        check(self.delta.is_finite() && self.delta != 0.0, "delta", "must be finite and non-zero")?;
        check(self.gamma_b.is_finite() && self.gamma_b >= 0.0, "gamma_b", "must be non-negative")?;
        check(self.n_z >= 2, "n_z", "must be at least 2")?;
        check(self.buffer_delay.is_finite() && self.buffer_delay >= 0.0, "buffer_delay", "must be non-negative")?;
        check(self.transit_time.is_finite() && self.transit_time >= 0.0, "transit_time", "must be non-negative")?;
        check(self.energy_scale.is_finite() && self.energy_scale > 0.0, "energy_scale", "must be positive")?;
        Ok(())
    }

    /// Amplitude decay of the stored spin wave.
    pub fn storage_factor(&self) -> f64 {
        (-self.gamma_b * self.buffer_delay).exp()
    }
}

/// Normalized control envelope shape; the energy sets the overall scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PulseShape {
    /// `exp(−(t−c)²/2w²) · exp(i·chirp·(t−c)²)`.
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        chirp: f64,
    },
    /// Piecewise-linear complex envelope through `(times[k], re[k] + i·im[k])`,
    /// zero outside the first and last knot.
    Knots { times: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

impl PulseShape {
    pub fn gaussian(center: f64, width: f64) -> Self {
        PulseShape::Gaussian {
            center,
            width,
            chirp: 0.0,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            PulseShape::Gaussian { center, width, chirp } => {
                if !(center.is_finite() && chirp.is_finite()) {
                    return Err(Error::validation(field, "center and chirp must be finite"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::validation(format!("{field}.width"), "must be positive"));
                }
            }
            PulseShape::Knots { times, re, im } => {
                if times.len() < 2 || re.len() != times.len() || im.len() != times.len() {
                    return Err(Error::validation(
                        format!("{field}.times"),
                        "need at least two knots and matching re/im lengths",
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::validation(format!("{field}.times"), "must be finite and strictly increasing"));
                }
                if re.iter().chain(im).any(|v| !v.is_finite()) {
                    return Err(Error::validation(format!("{field}.re"), "knot values must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Complex64 {
        match self {
            PulseShape::Gaussian { center, width, chirp } => {
                let u = t - center;
                if u.abs() > GAUSSIAN_SUPPORT * width {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::from_polar((-u * u / (2.0 * width * width)).exp(), chirp * u * u)
            }
            PulseShape::Knots { times, re, im } => {
                let last = times.len() - 1;
                if t < times[0] || t > times[last] {
                    return Complex64::new(0.0, 0.0);
                }
                let k = times.partition_point(|&x| x <= t).clamp(1, last) - 1;
                let f = (t - times[k]) / (times[k + 1] - times[k]);
                let a = Complex64::new(re[k], im[k]);
                let b = Complex64::new(re[k + 1], im[k + 1]);
                a + (b - a) * f
            }
        }
    }

    /// `∫|shape|² dt`.
    pub fn norm2(&self) -> f64 {
        match self {
            PulseShape::Gaussian { width, .. } => width * PI.sqrt(),
            PulseShape::Knots { times, re, im } => (0..times.len() - 1)
                .map(|k| {
                    let a = Complex64::new(re[k], im[k]);
                    let b = Complex64::new(re[k + 1], im[k + 1]);
                    (times[k + 1] - times[k]) * (a.norm_sqr() + b.norm_sqr() + (a * b.conj()).re) / 3.0
                })
                .sum(),
        }
    }

    /// Interval outside which the envelope vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            PulseShape::Gaussian { center, width, .. } => {
                (center - GAUSSIAN_SUPPORT * width, center + GAUSSIAN_SUPPORT * width)
            }
            PulseShape::Knots { times, .. } => (times[0], times[times.len() - 1]),
        }
    }

    /// Shortest time over which the envelope (magnitude or phase) changes
    /// appreciably.
    pub fn time_scale(&self) -> f64 {
        match self {
            PulseShape::Gaussian { width, chirp, .. } => {
                let phase = if *chirp == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / (2.0 * chirp.abs() * GAUSSIAN_SUPPORT * width)
                };
                width.min(phase)
            }
            PulseShape::Knots { times, .. } => times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest `|shape|²` on `[a, b]`.
    pub fn peak_in(&self, a: f64, b: f64) -> f64 {
        let (s0, s1) = self.support();
        if b < s0 || a > s1 {
            return 0.0;
        }
        match self {
            PulseShape::Gaussian { center, .. } => {
                let t = center.clamp(a, b);
                self.value(t).norm_sqr()
            }
            PulseShape::Knots { times, .. } => {
                // piecewise linear: extremes sit at knots or interval ends
                let mut m = self.value(a.max(s0)).norm_sqr().max(self.value(b.min(s1)).norm_sqr());
                for &t in times.iter().filter(|&&t| t >= a && t <= b) {
                    m = m.max(self.value(t).norm_sqr());
                }
                m
            }
        }
    }
}

/// Control field: a shape scaled to the given pulse energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPulse {
    pub shape: PulseShape,
    pub energy_pj: f64,
}

impl ControlPulse {
    pub fn new(shape: PulseShape, energy_pj: f64) -> Self {
        Self { shape, energy_pj }
    }

    pub fn gaussian(center: f64, width: f64, energy_pj: f64) -> Self {
        Self::new(PulseShape::gaussian(center, width), energy_pj)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        self.shape.validate(&format!("{field}.shape"))?;
        if !(self.energy_pj.is_finite() && self.energy_pj >= 0.0) {
            return Err(Error::validation(format!("{field}.energy_pj"), "must be non-negative"));
        }
        if self.energy_pj > 0.0 && self.shape.norm2() <= 0.0 {
            return Err(Error::validation(format!("{field}.shape"), "envelope is identically zero"));
        }
        Ok(())
    }

    /// Scale factor from shape to Rabi frequency.
    pub fn amplitude(&self, config: &BufferConfig) -> f64 {
        if self.energy_pj == 0.0 {
            return 0.0;
        }
        (config.energy_scale * self.energy_pj / self.shape.norm2()).sqrt()
    }

    /// Rabi frequency `Ω(t)` in rad/ns.
    pub fn rabi(&self, config: &BufferConfig, t: f64) -> Complex64 {
        self.shape.value(t) * self.amplitude(config)
    }

    /// `Ω` sampled on the grid.
    pub fn envelope(&self, config: &BufferConfig, grid: &TimeGrid) -> Vec<Complex64> {
        let a = self.amplitude(config);
        grid.points().iter().map(|&t| self.shape.value(t) * a).collect()
    }
}
