use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::buffer::config::PAPER_PULSE_WIDTH;
use crate::buffer::{BufferConfig, SurfaceSetup, ANCHOR_ENERGY_PJ};
use crate::emitters::{EmitterSpec, EnsembleSpec};
use crate::error::{Error, Result};
use crate::filters::{PassbandFamily, PassbandSpec};
use crate::optimize::Basis;

const DEFAULT_GAMMA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    EfficiencySurface,
    TradeoffSweep,
    Unification,
    SingleRun,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::EfficiencySurface,
        ScenarioKind::TradeoffSweep,
        ScenarioKind::Unification,
        ScenarioKind::SingleRun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::EfficiencySurface => "efficiency-surface",
            ScenarioKind::TradeoffSweep => "tradeoff-sweep",
            ScenarioKind::Unification => "unification",
            ScenarioKind::SingleRun => "single-run",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ScenarioKind::EfficiencySurface => "buffer efficiency against read-in and read-out control energy",
            ScenarioKind::TradeoffSweep => "brightness against purity for passive filters and the buffer, per emitter",
            ScenarioKind::Unification => "two emitters buffered into matching output modes",
            ScenarioKind::SingleRun => "one emitter through the buffer, with mode fractions and the optimizer trace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default)]
    pub t_start: Option<f64>,
    /// Defaults to `t_start + 12/Γ` for the slowest emitter.
    #[serde(default)]
    pub t_end: Option<f64>,
}

fn default_points() -> usize {
    256
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            n_points: default_points(),
            t_start: None,
            t_end: None,
        }
    }
}

/// Gaussian control used for the unoptimized buffer; the same pulse reads
/// in and out, with its centre chosen from a scan by brightness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSettings {
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_energy")]
    pub energy_pj: f64,
    #[serde(default)]
    pub center_min: f64,
    #[serde(default = "default_center_max")]
    pub center_max: f64,
    #[serde(default = "default_center_steps")]
    pub center_steps: usize,
}

fn default_width() -> f64 {
    PAPER_PULSE_WIDTH
}

fn default_energy() -> f64 {
    ANCHOR_ENERGY_PJ
}

fn default_center_max() -> f64 {
    0.6
}

fn default_center_steps() -> usize {
    13
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self {
            width: default_width(),
            energy_pj: default_energy(),
            center_min: 0.0,
            center_max: default_center_max(),
            center_steps: default_center_steps(),
        }
    }
}

impl ControlSettings {
    pub fn centers(&self) -> Vec<f64> {
        let n = self.center_steps;
        if n == 1 {
            return vec![self.center_min];
        }
        (0..n)
            .map(|k| self.center_min + (self.center_max - self.center_min) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSettings {
    pub budget: usize,
    /// Purity floor for the optimized buffer; unset means the purity the
    /// Gaussian control reaches.
    #[serde(default)]
    pub purity_floor: Option<f64>,
    /// Unification only: fraction of each buffer's starting brightness the
    /// read-out search must keep.
    #[serde(default = "default_brightness_floor")]
    pub brightness_floor: f64,
    #[serde(default)]
    pub basis: Basis,
}

fn default_brightness_floor() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSettings {
    pub read_in_energies: Vec<f64>,
    pub read_out_energies: Vec<f64>,
}

/// One configured run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// Not part of the scenario hash.
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub buffer: Option<BufferConfig>,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub filter: Option<PassbandFamily>,
    /// Single-run only: one explicit passband reported alongside the sweep.
    #[serde(default)]
    pub passband: Option<PassbandSpec>,
    #[serde(default)]
    pub control: Option<ControlSettings>,
    #[serde(default)]
    pub optimization: Option<OptimizationSettings>,
    #[serde(default)]
    pub surface: Option<SurfaceSettings>,
}

impl Scenario {
    /// Parses TOML text, validates it and fills every default.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::parse(text)?.canonicalize()
    }

    /// Parses TOML text without filling defaults.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Replaces the seed everywhere it is used.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(e) = &mut self.ensemble {
            e.seed = seed;
        }
    }

    /// Fills defaults and validates; idempotent.
    pub fn canonicalize(mut self) -> Result<Self> {
        let kind = self.kind;
        if self.name.trim().is_empty() {
            return Err(Error::validation("name", "must not be empty"));
        }
        match kind {
            ScenarioKind::EfficiencySurface => {
                self.buffer.get_or_insert_with(BufferConfig::paper_like);
                let setup = SurfaceSetup::paper_like(self.grid.n_points.max(2))?;
                self.grid.t_start.get_or_insert(setup.grid.t_start());
                self.grid.t_end.get_or_insert(setup.grid.t_end());
                self.surface.get_or_insert_with(|| SurfaceSettings {
                    read_in_energies: setup.read_in_energies.clone(),
                    read_out_energies: setup.read_out_energies.clone(),
                });
            }
            ScenarioKind::TradeoffSweep | ScenarioKind::SingleRun | ScenarioKind::Unification => {
                self.buffer.get_or_insert_with(|| BufferConfig::paper_like().without_decay());
                if kind == ScenarioKind::TradeoffSweep && self.emitters.is_empty() {
                    self.ensemble
                        .get_or_insert_with(|| EnsembleSpec::paper_like(DEFAULT_GAMMA, self.seed));
                }
                self.control.get_or_insert_with(ControlSettings::default);
                let budget = if kind == ScenarioKind::Unification { 800 } else { 150 };
                self.optimization.get_or_insert(OptimizationSettings {
                    budget,
                    purity_floor: if kind == ScenarioKind::Unification { Some(0.95) } else { None },
                    brightness_floor: default_brightness_floor(),
                    basis: Basis::Gaussian,
                });
                if kind != ScenarioKind::Unification {
                    self.filter.get_or_insert_with(PassbandFamily::default);
                }
                let gamma = self.slowest_gamma().unwrap_or(DEFAULT_GAMMA);
                let t0 = *self.grid.t_start.get_or_insert(0.0);
                self.grid.t_end.get_or_insert(t0 + 12.0 / gamma);
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn slowest_gamma(&self) -> Option<f64> {
        let from_list = self.emitters.iter().map(|e| e.gamma).fold(f64::INFINITY, f64::min);
        let from_ensemble = self.ensemble.as_ref().map_or(f64::INFINITY, |e| e.gamma.min);
        let g = from_list.min(from_ensemble);
        (g.is_finite() && g > 0.0).then_some(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n_points < 2 {
            return Err(Error::validation("grid.n_points", "must be at least 2"));
        }
        if let (Some(a), Some(b)) = (self.grid.t_start, self.grid.t_end) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::validation("grid.t_end", "must exceed grid.t_start"));
            }
        }
        if let Some(b) = &self.buffer {
            b.validate()?;
        }
        for e in &self.emitters {
            e.validate()?;
        }
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        if let Some(p) = &self.passband {
            p.validate()?;
        }
        if let Some(c) = &self.control {
            if !(c.width > 0.0 && c.width.is_finite()) {
                return Err(Error::validation("control.width", "must be positive"));
            }
            if !(c.energy_pj > 0.0 && c.energy_pj.is_finite()) {
                return Err(Error::validation("control.energy_pj", "must be positive"));
            }
            if c.center_steps < 1 || !(c.center_min <= c.center_max) {
                return Err(Error::validation("control.center_steps", "need at least one centre and min <= max"));
            }
        }
        if let Some(o) = &self.optimization {
            if o.budget < 1 {
                return Err(Error::validation("optimization.budget", "must be at least 1"));
            }
            if o.purity_floor.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::validation("optimization.purity_floor", "must lie in [0, 1]"));
            }
            if !(0.0..=1.0).contains(&o.brightness_floor) {
                return Err(Error::validation("optimization.brightness_floor", "must lie in [0, 1]"));
            }
        }
        if let Some(s) = &self.surface {
            let ok = |v: &Vec<f64>| !v.is_empty() && v.iter().all(|e| e.is_finite() && *e >= 0.0);
            if !ok(&s.read_in_energies) {
                return Err(Error::validation("surface.read_in_energies", "need non-negative energies"));
            }
            if !ok(&s.read_out_energies) {
                return Err(Error::validation("surface.read_out_energies", "need non-negative energies"));
            }
        }
        match self.kind {
            ScenarioKind::SingleRun if self.emitters.len() != 1 => {
                Err(Error::validation("emitters", "single-run needs exactly one emitter"))
            }
            ScenarioKind::Unification if self.emitters.len() != 2 => {
                Err(Error::validation("emitters", "unification needs exactly two emitters"))
            }
            ScenarioKind::TradeoffSweep if self.emitters.is_empty() && self.ensemble.is_none() => {
                Err(Error::validation("ensemble", "tradeoff-sweep needs emitters or an ensemble"))
            }
            _ => Ok(()),
        }
    }

    /// Canonical TOML, defaults included.
    pub fn to_canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// SHA-256 of the canonical form without the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut s = self.clone();
        s.output_dir = None;
        let digest = Sha256::digest(s.to_canonical_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Reads, validates and canonicalizes a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml(&text)
}
