use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::passband::{PassbandShape, PassbandSpec};
use crate::error::{Error, Result};
use crate::modespace::{purity, to_frequency, Domain, ModeState};

pub const DEFAULT_RESOLUTION: usize = 64;
/// Time-domain zero-padding factor applied before transforming.
pub const DEFAULT_PADDING: usize = 4;
const PURE: f64 = 1.0 - 1e-9;

/// Inclusive sweep range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
}

/// Family of passbands swept over centres (linear) and widths (logarithmic).
///
/// Unset ranges are derived from each state: centres span the spectral mean
/// ± 2 rms widths, widths run from two frequency bins to the full band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassbandFamily {
    #[serde(default)]
    pub shape: PassbandShape,
    #[serde(default)]
    pub centers: Option<SweepRange>,
    #[serde(default)]
    pub widths: Option<SweepRange>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_padding")]
    pub padding: usize,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

fn default_padding() -> usize {
    DEFAULT_PADDING
}

impl Default for PassbandFamily {
    fn default() -> Self {
        Self::new(PassbandShape::Lorentzian)
    }
}

impl PassbandFamily {
    pub fn new(shape: PassbandShape) -> Self {
        Self {
            shape,
            centers: None,
            widths: None,
            resolution: DEFAULT_RESOLUTION,
            padding: DEFAULT_PADDING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::validation("PassbandFamily.resolution", "must be at least 2"));
        }
        if self.padding < 1 {
            return Err(Error::validation("PassbandFamily.padding", "must be at least 1"));
        }
        if let Some(r) = self.centers {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::validation("PassbandFamily.centers", "range is not well ordered"));
            }
        }
        if let Some(r) = self.widths {
            if !(r.min > 0.0 && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::validation("PassbandFamily.widths", "need 0 < min <= max"));
            }
        }
        Ok(())
    }
}

/// One evaluated filter setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub shape: PassbandShape,
    pub center: f64,
    pub width: f64,
    pub b_mult: f64,
    pub purity: f64,
    pub pareto: bool,
}

/// Sweep result for one state.
#[derive(Debug, Clone)]
pub struct Frontier {
    pub input_purity: f64,
    /// Every evaluated point, widths outer and centres inner, with the
    /// unfiltered reference (`b_mult = 1`) first.
    pub points: Vec<SweepPoint>,
    /// Pareto-maximal `(b_mult, purity)` pairs, brightest first.
    pub frontier: Vec<(f64, f64)>,
}

impl Frontier {
    /// Best purity over centres for every swept width, narrowest first, as
    /// `(width, b_mult, purity)`.
    pub fn width_profile(&self) -> Vec<(f64, f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        for p in self.points.iter().skip(1) {
            match out.last_mut() {
                Some(last) if last.0 == p.width => {
                    if p.purity > last.2 {
                        *last = (p.width, p.b_mult, p.purity);
                    }
                }
                _ => out.push((p.width, p.b_mult, p.purity)),
            }
        }
        out
    }

    /// Whether some frontier point has at least `b_mult` and `purity`.
    pub fn dominates(&self, b_mult: f64, purity: f64) -> bool {
        self.frontier.iter().any(|&(b, p)| b >= b_mult && p >= purity && (b > b_mult || p > purity))
    }
}

/// Frontiers of several states and the upper envelope of their union.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub frontiers: Vec<Frontier>,
    pub envelope: Vec<(f64, f64)>,
}

/// Indices of the Pareto-maximal points (both coordinates maximized),
/// ordered by decreasing first coordinate.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
            .then(a.cmp(&b))
    });
    let mut best = f64::NEG_INFINITY;
    let mut keep = Vec::new();
    for i in order {
        if points[i].1 > best {
            best = points[i].1;
            keep.push(i);
        }
    }
    keep
}

/// Sweeps the family over one state.
pub fn filter_sweep(state: &ModeState, family: &PassbandFamily) -> Result<Frontier> {
    family.validate()?;
    let input_purity = purity(state);
    let reference = SweepPoint {
        shape: family.shape,
        center: f64::NAN,
        width: f64::INFINITY,
        b_mult: 1.0,
        purity: input_purity,
        pareto: true,
    };
    if input_purity >= PURE {
        return Ok(Frontier {
            input_purity,
            points: vec![reference],
            frontier: vec![(1.0, input_purity)],
        });
    }
    let spectral = match state.domain() {
        Domain::Time => to_frequency(&state.zero_pad(state.len() * family.padding)?)?,
        Domain::Frequency => state.clone(),
    };
    let omegas = spectral.coordinates();
    let pops = spectral.populations();
    let d_omega = spectral.step();
    let mean: f64 = omegas.iter().zip(&pops).map(|(w, p)| w * p).sum();
    let var: f64 = omegas.iter().zip(&pops).map(|(w, p)| (w - mean).powi(2) * p).sum();
    let rms = var.sqrt().max(d_omega);
    let res = family.resolution;
    let half = (res / 2) as f64;
    let centers: Vec<f64> = match family.centers {
        Some(r) => (0..res).map(|k| r.min + (r.max - r.min) * k as f64 / (res - 1) as f64).collect(),
        None => (0..res).map(|k| mean + 2.0 * rms * (k as f64 - half) / half).collect(),
    };
    let (wmin, wmax) = match family.widths {
        Some(r) => (r.min, r.max),
        None => (2.0 * d_omega, d_omega * omegas.len() as f64),
    };
    let widths: Vec<f64> = (0..res)
        .map(|k| wmin * (wmax / wmin).powf(k as f64 / (res - 1) as f64))
        .collect();

    // |K_ij|² once; each setting is then a quadratic form in |f|²
    let k = spectral.weighted();
    let n = k.nrows();
    let q: Vec<f64> = k.iter().map(|z| z.norm_sqr()).collect();
    let diag: Vec<f64> = (0..n).map(|i| k[(i, i)].re).collect();
    let evaluate = |band: PassbandSpec| -> SweepPoint {
        let a: Vec<f64> = omegas.iter().map(|&w| band.intensity(w)).collect();
        let b: f64 = a.iter().zip(&diag).map(|(a, d)| a * d).sum();
        let mut num = 0.0;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            let col = &q[j * n..(j + 1) * n];
            let s: f64 = a.iter().zip(col).map(|(ai, qij)| ai * qij).sum();
            num += aj * s;
        }
        let purity = if b > 0.0 { num / (b * b) } else { 0.0 };
        SweepPoint {
            shape: band.shape,
            center: band.center,
            width: band.width,
            b_mult: b,
            purity,
            pareto: false,
        }
    };
    let swept: Vec<Vec<SweepPoint>> = widths
        .par_iter()
        .map(|&w| {
            centers
                .iter()
                .map(|&c| evaluate(PassbandSpec::new(family.shape, c, w)))
                .collect()
        })
        .collect();
    let mut points = vec![reference];
    points.extend(swept.into_iter().flatten().filter(|p| p.b_mult > 1e-12));
    for p in points.iter_mut() {
        p.pareto = false;
    }
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

/// Sweeps every state and forms the upper envelope of all frontiers.
pub fn filter_envelope(states: &[ModeState], family: &PassbandFamily) -> Result<Envelope> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("filter_envelope needs at least one state".into()));
    }
    let frontiers: Vec<Frontier> = states.iter().map(|s| filter_sweep(s, family)).collect::<Result<_>>()?;
    let all: Vec<(f64, f64)> = frontiers.iter().flat_map(|f| f.frontier.iter().copied()).collect();
    let envelope = pareto_indices(&all).into_iter().map(|i| all[i]).collect();
    Ok(Envelope { frontiers, envelope })
}
