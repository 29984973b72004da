//! Noisy single-photon sources.
//!
//! A Markovian two-level emitter with pure dephasing gives the kernel
//! `ρ(t₁,t₂) ∝ e^{−Γ(t₁+t₂)/2} e^{−γ*|t₁−t₂|} e^{−iω₀(t₁−t₂)}` for
//! `t₁,t₂ ≥ t₀`. Slow spectral diffusion and timing jitter are averaged on
//! top of that.

mod ensemble;
mod kernel;
pub mod quadrature;

pub use ensemble::{sample_ensemble, EnsembleMember, EnsembleSpec, ParamRange};
pub use kernel::{apply_inhomogeneous, delayed_mixture, dephasing_kernel, DEFAULT_QUADRATURE_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum JitterKind {
    #[default]
    None,
    /// Zero-mean normal delay with standard deviation `scale`.
    Gaussian,
    /// Exponentially distributed delay with mean `scale`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Jitter {
    #[serde(default)]
    pub kind: JitterKind,
    #[serde(default)]
    pub scale: f64,
}

impl Jitter {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn exponential(scale: f64) -> Self {
        Self {
            kind: JitterKind::Exponential,
            scale,
        }
    }

    pub fn gaussian(scale: f64) -> Self {
        Self {
            kind: JitterKind::Gaussian,
            scale,
        }
    }

    fn is_trivial(&self) -> bool {
        self.kind == JitterKind::None || self.scale == 0.0
    }
}

/// Parameters of one emitter. Rates in 1/ns, frequencies in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub gamma: f64,
    #[serde(default)]
    pub gamma_star: f64,
    #[serde(default)]
    pub sigma_diff: f64,
    #[serde(default)]
    pub jitter: Jitter,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default = "one")]
    pub b0: f64,
}

fn one() -> f64 {
    1.0
}

impl EmitterSpec {
    /// Lifetime-limited emitter with decay rate `gamma`.
    pub fn ideal(gamma: f64) -> Self {
        Self {
            gamma,
            gamma_star: 0.0,
            sigma_diff: 0.0,
            jitter: Jitter::none(),
            omega0: 0.0,
            b0: 1.0,
        }
    }

    pub fn with_dephasing(mut self, gamma_star: f64) -> Self {
        self.gamma_star = gamma_star;
        self
    }

    pub fn with_diffusion(mut self, sigma_diff: f64) -> Self {
        self.sigma_diff = sigma_diff;
        self
    }

    pub fn with_jitter(mut self, jitter: Jitter) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_carrier(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn with_brightness(mut self, b0: f64) -> Self {
        self.b0 = b0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::validation(format!("EmitterSpec.{field}"), reason))
            }
        };
        check(self.gamma.is_finite() && self.gamma > 0.0, "gamma", "must be positive")?;
        check(self.gamma_star.is_finite() && self.gamma_star >= 0.0, "gamma_star", "must be non-negative")?;
        check(self.sigma_diff.is_finite() && self.sigma_diff >= 0.0, "sigma_diff", "must be non-negative")?;
        check(self.jitter.scale.is_finite() && self.jitter.scale >= 0.0, "jitter.scale", "must be non-negative")?;
        check(self.omega0.is_finite(), "omega0", "must be finite")?;
        check(self.b0 > 0.0 && self.b0 <= 1.0, "b0", "must lie in (0, 1]")?;
        Ok(())
    }
}
