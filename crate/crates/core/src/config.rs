//! Run configuration: one TOML file pins every knob of a pipeline run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Taper;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// SBR2 stop: largest off-diagonal coefficient relative to `‖R‖_F`.
    pub sbr2: f64,
    pub sbr2_max_iter: usize,
    /// Post-clip spectral check for K², relative to the spectral scale.
    pub clip: f64,
    /// `‖K¹(τ_max) − Λ‖_F / ‖Λ‖_F` above which a warning is raised.
    pub tail: f64,
    /// Tolerance of the admissibility check.
    pub nsa: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sbr2: 1e-12, sbr2_max_iter: 20_000, clip: 1e-10, tail: 1e-3, nsa: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Hawkes spec (TOML) driving a synthetic run.
    pub spec: Option<PathBuf>,
    /// Event files, one per day.
    pub events: Vec<PathBuf>,
    /// Price files matching `events`.
    pub prices: Vec<PathBuf>,
    pub bin_width: f64,
    pub tau_max: usize,
    pub grid: usize,
    pub taper: Taper,
    /// Length of one simulated day in seconds.
    pub horizon: f64,
    pub days: usize,
    pub seed: u64,
    pub trim_start: f64,
    pub trim_end: f64,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: None,
            events: Vec::new(),
            prices: Vec::new(),
            bin_width: 1.0,
            tau_max: 128,
            grid: crate::DEFAULT_GRID,
            taper: Taper::Bartlett,
            horizon: 3600.0,
            days: 1,
            seed: 0,
            trim_start: 0.0,
            trim_end: 0.0,
            output_dir: PathBuf::from("out"),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(s) = cfg.spec.as_mut() {
            resolve(s);
        }
        cfg.events.iter_mut().for_each(resolve);
        cfg.prices.iter_mut().for_each(resolve);
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the input-source exclusivity and the numeric ranges.
    pub fn validate(&self) -> Result<()> {
        match (self.spec.is_some(), !self.events.is_empty()) {
            (true, true) => {
                return Err(Error::Config("give either a spec or data files, not both".into()))
            }
            (false, false) => return Err(Error::Config("no input: set `spec` or `events`".into())),
            _ => {}
        }
        if !self.events.is_empty() && self.prices.len() != self.events.len() {
            return Err(Error::Config(format!(
                "{} event files but {} price files",
                self.events.len(),
                self.prices.len()
            )));
        }
        let t = &self.tolerances;
        for (name, v) in [("sbr2", t.sbr2), ("clip", t.clip), ("tail", t.tail), ("nsa", t.nsa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        if t.sbr2_max_iter == 0 {
            return Err(Error::Config("`sbr2_max_iter` must be positive".into()));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::Config(format!("bin_width must be positive, got {}", self.bin_width)));
        }
        if self.tau_max == 0 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        if self.grid < 2 * self.tau_max + 1 {
            return Err(Error::Config(format!(
                "grid {} is smaller than 2 tau_max + 1 = {}",
                self.grid,
                2 * self.tau_max + 1
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be non-negative, got {}", self.horizon)));
        }
        if self.days == 0 {
            return Err(Error::Config("days must be at least 1".into()));
        }
        if self.trim_start < 0.0 || self.trim_end < 0.0 {
            return Err(Error::Config("trims must be non-negative".into()));
        }
        Ok(())
    }
}
