use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_inhomogeneous, EmitterSpec, Jitter, JitterKind, DEFAULT_QUADRATURE_POINTS};
use crate::error::{Error, Result};
use crate::modespace::{ModeState, TimeGrid};

/// Closed interval sampled uniformly; `min == max` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        // always consume one draw so the stream layout does not depend on
        // which ranges are degenerate
        let u: f64 = rng.gen();
        if self.min == self.max {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    pub gamma: ParamRange,
    pub gamma_star: ParamRange,
    pub sigma_diff: ParamRange,
    pub jitter_kind: JitterKind,
    pub jitter_scale: ParamRange,
    pub omega0: ParamRange,
    pub b0: ParamRange,
    pub quadrature_points: usize,
}

impl EnsembleSpec {
    /// Sixteen emitters around `gamma`, with γ* ∈ [0, 0.3Γ], σ ∈ [0, Γ] and
    /// exponential jitter of mean up to 1/Γ.
    pub fn paper_like(gamma: f64, seed: u64) -> Self {
        Self {
            count: 16,
            seed,
            gamma: ParamRange::fixed(gamma),
            gamma_star: ParamRange::new(0.0, 0.3 * gamma),
            sigma_diff: ParamRange::new(0.0, gamma),
            jitter_kind: JitterKind::Exponential,
            jitter_scale: ParamRange::new(0.0, 1.0 / gamma),
            omega0: ParamRange::fixed(0.0),
            b0: ParamRange::fixed(1.0),
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::validation("EnsembleSpec.count", "must be at least 1"));
        }
        if self.quadrature_points == 0 {
            return Err(Error::validation("EnsembleSpec.quadrature_points", "must be at least 1"));
        }
        let ranges = [
            ("gamma", self.gamma),
            ("gamma_star", self.gamma_star),
            ("sigma_diff", self.sigma_diff),
            ("jitter_scale", self.jitter_scale),
            ("omega0", self.omega0),
            ("b0", self.b0),
        ];
        for (name, r) in ranges {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::validation(
                    format!("EnsembleSpec.{name}"),
                    format!("range [{}, {}] is not well ordered", r.min, r.max),
                ));
            }
        }
        Ok(())
    }

    /// Parameters of member `index`, independent of every other member.
    pub fn draw(&self, index: usize) -> EmitterSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let gamma = self.gamma.draw(&mut rng);
        let gamma_star = self.gamma_star.draw(&mut rng);
        let sigma_diff = self.sigma_diff.draw(&mut rng);
        let scale = self.jitter_scale.draw(&mut rng);
        let omega0 = self.omega0.draw(&mut rng);
        let b0 = self.b0.draw(&mut rng);
        EmitterSpec {
            gamma,
            gamma_star,
            sigma_diff,
            jitter: Jitter {
                kind: self.jitter_kind,
                scale,
            },
            omega0,
            b0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub index: usize,
    pub spec: EmitterSpec,
    pub state: ModeState,
}

/// Draws and builds every member. Members are built in parallel but the
/// result is in index order and identical to a serial build.
pub fn sample_ensemble(spec: &EnsembleSpec, grid: &TimeGrid) -> Result<Vec<EnsembleMember>> {
    spec.validate()?;
    (0..spec.count)
        .into_par_iter()
        .map(|index| {
            let emitter = spec.draw(index);
            apply_inhomogeneous(&emitter, grid, spec.quadrature_points)
                .map(|state| EnsembleMember {
                    index,
                    spec: emitter,
                    state,
                })
                .map_err(|e| Error::Ensemble {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}
