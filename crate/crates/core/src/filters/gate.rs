//! Temporal gating: a time-domain rectangular window, the simplest
//! non-spectral passive filter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{pareto_indices, Frontier, SweepPoint, SweepRange};
use super::PassbandShape;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::state::project_weighted;
use crate::modespace::{purity, Domain, ModeState};

/// Windows `[start, start + width]` swept over start (linear) and width
/// (logarithmic, from two samples to the full grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateFamily {
    #[serde(default)]
    pub starts: Option<SweepRange>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    32
}

impl Default for GateFamily {
    fn default() -> Self {
        Self {
            starts: None,
            resolution: default_resolution(),
        }
    }
}

/// Keeps only the samples inside `[start, end]`.
pub fn apply_gate(state: &ModeState, start: f64, end: f64) -> Result<(ModeState, f64)> {
    if state.domain() != Domain::Time {
        return Err(Error::WrongDomain { expected: "time" });
    }
    let t = state.coordinates();
    let inside: Vec<bool> = t.iter().map(|&x| x >= start && x <= end).collect();
    let k = state.weighted();
    let n = k.nrows();
    let out = CMatrix::from_fn(n, n, |i, j| if inside[i] && inside[j] { k[(i, j)] } else { Default::default() });
    let b = crate::linalg::real_trace(&out);
    if b <= 1e-12 {
        return Err(Error::ZeroTrace(b.max(0.0)));
    }
    Ok((project_weighted(out.unscale(b), state.grid(), Domain::Time)?, b))
}

/// Brightness/purity frontier of the gate family. Gate points report their
/// start time as `center` and their duration as `width`.
pub fn gate_sweep(state: &ModeState, family: &GateFamily) -> Result<Frontier> {
    if family.resolution < 2 {
        return Err(Error::validation("GateFamily.resolution", "must be at least 2"));
    }
    if state.domain() != Domain::Time {
        return Err(Error::WrongDomain { expected: "time" });
    }
    let grid = state.grid();
    let input_purity = purity(state);
    let span = grid.t_end() - grid.t_start();
    let res = family.resolution;
    let starts: Vec<f64> = match family.starts {
        Some(r) => (0..res).map(|k| r.min + (r.max - r.min) * k as f64 / (res - 1) as f64).collect(),
        None => (0..res).map(|k| grid.t_start() + 0.5 * span * k as f64 / (res - 1) as f64).collect(),
    };
    let (wmin, wmax) = (2.0 * grid.dt(), span);
    let widths: Vec<f64> = (0..res).map(|k| wmin * (wmax / wmin).powf(k as f64 / (res - 1) as f64)).collect();
    let k = state.weighted();
    let t = state.coordinates();
    let swept: Vec<Vec<SweepPoint>> = widths
        .par_iter()
        .map(|&w| {
            starts
                .iter()
                .filter_map(|&s| {
                    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= s && t[i] <= s + w).collect();
                    let b: f64 = idx.iter().map(|&i| k[(i, i)].re).sum();
                    if b <= 1e-12 {
                        return None;
                    }
                    let num: f64 = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| k[(i, j)].norm_sqr()).sum();
                    Some(SweepPoint {
                        shape: PassbandShape::Rectangular,
                        center: s,
                        width: w,
                        b_mult: b,
                        purity: num / (b * b),
                        pareto: false,
                    })
                })
                .collect()
        })
        .collect();
    let mut points = vec![SweepPoint {
        shape: PassbandShape::Rectangular,
        center: f64::NAN,
        width: f64::INFINITY,
        b_mult: 1.0,
        purity: input_purity,
        pareto: false,
    }];
    points.extend(swept.into_iter().flatten());
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.b_mult, p.purity)).collect();
    let keep = pareto_indices(&pairs);
    for &i in &keep {
        points[i].pareto = true;
    }
    Ok(Frontier {
        input_purity,
        frontier: keep.iter().map(|&i| pairs[i]).collect(),
        points,
    })
}
