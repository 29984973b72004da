use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::buffer::{ControlPulse, PulseShape};
use crate::error::{Error, Result};

/// Quadratic penalty weight on constraint violations.
pub const PENALTY_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Objective {
    /// Retrieved brightness `W = B/B₀`, penalized below the purity floor.
    BrightnessAtPurityFloor { purity_floor: f64 },
    /// `|⟨u₀|ψ₀⟩|²` between the buffer's dominant input mode and the
    /// emitter's dominant eigenmode, with the read-out held fixed.
    ModeOverlap,
    /// `I⁽²⁾` of two buffered outputs. Each brightness is penalized below
    /// `brightness_floor` times its value when the read-out search starts;
    /// `purity_floor` applies to the read-in selection stage.
    Unification { purity_floor: f64, brightness_floor: f64 },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::BrightnessAtPurityFloor { .. } => "brightness-at-purity-floor",
            Objective::ModeOverlap => "mode-overlap",
            Objective::Unification { .. } => "unification",
        }
    }
}

/// Control parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Basis {
    /// Arrival time, width, linear chirp and energy.
    #[default]
    Gaussian,
    /// Energy plus complex values at `count` evenly spaced interior knots of
    /// `[start, end]`; the envelope vanishes at both ends.
    Knots { count: usize, start: f64, end: f64 },
}

impl Basis {
    pub fn describe(&self) -> String {
        match self {
            Basis::Gaussian => "gaussian(center,width,chirp,energy)".into(),
            Basis::Knots { count, start, end } => format!("knots({count} on [{start},{end}],energy)"),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Basis::Gaussian => 4,
            Basis::Knots { count, .. } => 1 + 2 * count,
        }
    }

    fn knot_times(count: usize, start: f64, end: f64) -> Vec<f64> {
        (0..count + 2).map(|k| start + (end - start) * k as f64 / (count + 1) as f64).collect()
    }
}

/// Per-parameter search intervals `[min, max]`. Width and energy are
/// searched on a log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseBounds {
    pub center: (f64, f64),
    pub width: (f64, f64),
    pub chirp: (f64, f64),
    pub energy: (f64, f64),
    #[serde(default = "default_knot_value")]
    pub knot_value: (f64, f64),
}

fn default_knot_value() -> (f64, f64) {
    (-1.0, 1.0)
}

impl PulseBounds {
    /// Default box around a Gaussian control.
    pub fn around(pulse: &ControlPulse) -> Self {
        let (center, width) = match pulse.shape {
            PulseShape::Gaussian { center, width, .. } => (center, width),
            PulseShape::Knots { .. } => {
                let (a, b) = pulse.shape.support();
                (0.5 * (a + b), 0.25 * (b - a))
            }
        };
        Self {
            center: (center - 0.5, center + 0.5),
            width: ((0.3 * width).max(0.04), (2.5 * width).min(0.45).max(width)),
            chirp: (-60.0, 60.0),
            energy: (0.1 * pulse.energy_pj, 5.0 * pulse.energy_pj),
            knot_value: default_knot_value(),
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let check = |r: (f64, f64), name: &str, positive: bool| {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) || (positive && r.0 <= 0.0) {
                Err(Error::validation(
                    format!("{field}.{name}"),
                    if positive { "need 0 < min <= max" } else { "need min <= max" },
                ))
            } else {
                Ok(())
            }
        };
        check(self.center, "center", false)?;
        check(self.width, "width", true)?;
        check(self.chirp, "chirp", false)?;
        check(self.energy, "energy", true)?;
        check(self.knot_value, "knot_value", false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationProblem {
    pub objective: Objective,
    #[serde(default)]
    pub basis: Basis,
    /// Starting controls; the baseline objective is evaluated here.
    pub read_in: ControlPulse,
    pub read_out: ControlPulse,
    pub read_in_bounds: PulseBounds,
    pub read_out_bounds: PulseBounds,
    /// Search the read-out control as well as the read-in.
    #[serde(default = "yes")]
    pub optimize_read_out: bool,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl OptimizationProblem {
    pub fn new(objective: Objective, read_in: ControlPulse, read_out: ControlPulse, budget: usize, seed: u64) -> Self {
        Self {
            objective,
            basis: Basis::Gaussian,
            read_in_bounds: PulseBounds::around(&read_in),
            read_out_bounds: PulseBounds::around(&read_out),
            read_in,
            read_out,
            optimize_read_out: true,
            budget,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::validation("OptimizationProblem.budget", "must be at least 1"));
        }
        if let Basis::Knots { count, start, end } = self.basis {
            if count < 1 {
                return Err(Error::validation("OptimizationProblem.basis.count", "must be at least 1"));
            }
            if !(start.is_finite() && end.is_finite() && start < end) {
                return Err(Error::validation("OptimizationProblem.basis.start", "need start < end"));
            }
        }
        match self.objective {
            Objective::BrightnessAtPurityFloor { purity_floor } | Objective::Unification { purity_floor, .. }
                if !(0.0..=1.0).contains(&purity_floor) =>
            {
                return Err(Error::validation("OptimizationProblem.objective.purity_floor", "must lie in [0, 1]"));
            }
            Objective::Unification { brightness_floor, .. } if !(0.0..=1.0).contains(&brightness_floor) => {
                return Err(Error::validation(
                    "OptimizationProblem.objective.brightness_floor",
                    "must lie in [0, 1]",
                ));
            }
            _ => {}
        }
        self.read_in.validate("OptimizationProblem.read_in")?;
        self.read_out.validate("OptimizationProblem.read_out")?;
        self.read_in_bounds.validate("OptimizationProblem.read_in_bounds")?;
        self.read_out_bounds.validate("OptimizationProblem.read_out_bounds")
    }
}

/// Maps a control to and from a point of the unit cube.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PulseMap {
    pub basis: Basis,
    pub bounds: PulseBounds,
}

fn to_unit(v: f64, (lo, hi): (f64, f64), log: bool) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let u = if log { (v.ln() - lo.ln()) / (hi.ln() - lo.ln()) } else { (v - lo) / (hi - lo) };
    u.clamp(0.0, 1.0)
}

fn from_unit(u: f64, (lo, hi): (f64, f64), log: bool) -> f64 {
    if log {
        (lo.ln() + u * (hi.ln() - lo.ln())).exp()
    } else {
        lo + u * (hi - lo)
    }
}

impl PulseMap {
    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn encode(&self, pulse: &ControlPulse) -> Vec<f64> {
        let b = &self.bounds;
        match self.basis {
            Basis::Gaussian => {
                let (center, width, chirp) = match pulse.shape {
                    PulseShape::Gaussian { center, width, chirp } => (center, width, chirp),
                    PulseShape::Knots { .. } => {
                        let (a, z) = pulse.shape.support();
                        (0.5 * (a + z), 0.25 * (z - a), 0.0)
                    }
                };
                vec![
                    to_unit(center, b.center, false),
                    to_unit(width, b.width, true),
                    to_unit(chirp, b.chirp, false),
                    to_unit(pulse.energy_pj, b.energy, true),
                ]
            }
            Basis::Knots { count, start, end } => {
                let times = Basis::knot_times(count, start, end);
                let vals: Vec<Complex64> = times[1..=count].iter().map(|&t| pulse.shape.value(t)).collect();
                let peak = vals.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
                let scale = if peak > 0.0 { b.knot_value.1.abs().max(b.knot_value.0.abs()) / peak } else { 0.0 };
                let mut x = vec![to_unit(pulse.energy_pj, b.energy, true)];
                for z in vals {
                    x.push(to_unit(z.re * scale, b.knot_value, false));
                    x.push(to_unit(z.im * scale, b.knot_value, false));
                }
                x
            }
        }
    }

    pub fn decode(&self, x: &[f64]) -> ControlPulse {
        let b = &self.bounds;
        match self.basis {
            Basis::Gaussian => ControlPulse::new(
                PulseShape::Gaussian {
                    center: from_unit(x[0], b.center, false),
                    width: from_unit(x[1], b.width, true),
                    chirp: from_unit(x[2], b.chirp, false),
                },
                from_unit(x[3], b.energy, true),
            ),
            Basis::Knots { count, start, end } => {
                let times = Basis::knot_times(count, start, end);
                let mut re = vec![0.0; count + 2];
                let mut im = vec![0.0; count + 2];
                for k in 0..count {
                    re[k + 1] = from_unit(x[1 + 2 * k], b.knot_value, false);
                    im[k + 1] = from_unit(x[2 + 2 * k], b.knot_value, false);
                }
                ControlPulse::new(PulseShape::Knots { times, re, im }, from_unit(x[0], b.energy, true))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_encoding_round_trips() {
        let p = ControlPulse::new(
            PulseShape::Gaussian {
                center: 0.1,
                width: 0.15,
                chirp: -7.0,
            },
            900.0,
        );
        let map = PulseMap {
            basis: Basis::Gaussian,
            bounds: PulseBounds::around(&ControlPulse::gaussian(0.0, 0.177, 700.0)),
        };
        let q = map.decode(&map.encode(&p));
        match q.shape {
            PulseShape::Gaussian { center, width, chirp } => {
                assert!((center - 0.1).abs() < 1e-12 && (width - 0.15).abs() < 1e-12 && (chirp + 7.0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        assert!((q.energy_pj - 900.0).abs() < 1e-9);
    }

    #[test]
    fn knots_encoding_samples_the_start_pulse() {
        let p = ControlPulse::gaussian(0.0, 0.2, 500.0);
        let map = PulseMap {
            basis: Basis::Knots {
                count: 5,
                start: -0.6,
                end: 0.6,
            },
            bounds: PulseBounds::around(&p),
        };
        let q = map.decode(&map.encode(&p));
        assert!(q.validate("q").is_ok());
        assert!((q.shape.value(0.0).norm() - 1.0).abs() < 1e-12);
        assert!(q.shape.value(0.6).norm() == 0.0);
    }

    #[test]
    fn rejects_bad_problems() {
        let p = ControlPulse::gaussian(0.0, 0.177, 700.0);
        let mut prob = OptimizationProblem::new(Objective::ModeOverlap, p.clone(), p, 0, 0);
        assert!(matches!(prob.validate(), Err(Error::Validation { field, .. }) if field == "OptimizationProblem.budget"));
        prob.budget = 10;
        prob.read_in_bounds.width = (0.3, 0.1);
        assert!(prob.validate().is_err());
    }
}
