use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modespace::state::project_weighted;
use crate::modespace::{Domain, ModeState};

const ZERO_BRIGHTNESS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PassbandShape {
    #[default]
    Lorentzian,
    Gaussian,
    Rectangular,
}

impl PassbandShape {
    pub fn name(self) -> &'static str {
        match self {
            PassbandShape::Lorentzian => "lorentzian",
            PassbandShape::Gaussian => "gaussian",
            PassbandShape::Rectangular => "rectangular",
        }
    }
}

/// Spectral filter; `width` is the FWHM of the intensity transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassbandSpec {
    pub shape: PassbandShape,
    pub center: f64,
    pub width: f64,
}

impl PassbandSpec {
    pub fn new(shape: PassbandShape, center: f64, width: f64) -> Self {
        Self { shape, center, width }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::validation("PassbandSpec.width", "must be positive"));
        }
        if !self.center.is_finite() {
            return Err(Error::validation("PassbandSpec.center", "must be finite"));
        }
        Ok(())
    }

    /// Amplitude transmission `f(ω)`, with `|f| ≤ 1`.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        let u = omega - self.center;
        let h = 0.5 * self.width;
        match self.shape {
            // single-pole cavity response
            PassbandShape::Lorentzian => Complex64::new(h, 0.0) / Complex64::new(h, -u),
            PassbandShape::Gaussian => Complex64::new((-2.0 * std::f64::consts::LN_2 * u * u / (self.width * self.width)).exp(), 0.0),
            PassbandShape::Rectangular => Complex64::new(if u.abs() <= h { 1.0 } else { 0.0 }, 0.0),
        }
    }

    /// Intensity transmission `|f(ω)|²`.
    pub fn intensity(&self, omega: f64) -> f64 {
        self.transfer(omega).norm_sqr()
    }
}

/// Filters a frequency-domain state; returns the renormalized output and the
/// transmitted fraction `b_mult`.
pub fn apply_passband(state: &ModeState, band: &PassbandSpec) -> Result<(ModeState, f64)> {
    band.validate()?;
    let f: Vec<Complex64> = state.coordinates().iter().map(|&w| band.transfer(w)).collect();
    apply_transfer(state, &f)
}

/// Applies an arbitrary diagonal transfer function sampled on the state's
/// frequency bins.
pub fn apply_transfer(state: &ModeState, f: &[Complex64]) -> Result<(ModeState, f64)> {
    if state.domain() != Domain::Frequency {
        return Err(Error::WrongDomain { expected: "frequency" });
    }
    if f.len() != state.len() {
        return Err(Error::InvalidArgument(format!(
            "transfer function has {} samples, state has {}",
            f.len(),
            state.len()
        )));
    }
    let k = state.weighted();
    let n = k.nrows();
    let out = CMatrix::from_fn(n, n, |i, j| f[i] * k[(i, j)] * f[j].conj());
    let b = crate::linalg::real_trace(&out);
    if b <= ZERO_BRIGHTNESS {
        return Err(Error::ZeroTrace(b.max(0.0)));
    }
    let s = project_weighted(out.unscale(b), state.grid(), Domain::Frequency)?;
    Ok((s, b))
}
