//! Run configuration: one TOML document with an explicit schema version.

use crate::edge::Discretization;
use crate::error::{Error, Result};
use crate::potential::TrigRecord;
use crate::scenarios::{self, PipelineBudget, Scenario, ScenarioRecord};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Built-in scenario id.
    pub scenario: Option<String>,
    /// Inline potentials, used when no built-in id is given.
    pub potential: Option<PotentialSpec>,
    /// TOML file holding a [`PotentialSpec`].
    pub potential_file: Option<PathBuf>,
    /// When set, wall-clock timings are left out of every written artifact.
    pub deterministic: bool,
    pub bands: BandsConfig,
    pub chern: ChernConfig,
    pub budget: PipelineBudget,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: None,
            potential: None,
            potential_file: None,
            deterministic: true,
            bands: BandsConfig::default(),
            chern: ChernConfig::default(),
            budget: PipelineBudget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsConfig {
    /// Points on `[0, 2 pi]`, endpoints included.
    pub xi_samples: usize,
    pub band_count: usize,
}

impl Default for BandsConfig {
    fn default() -> Self {
        Self { xi_samples: 129, band_count: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernConfig {
    /// Uniform grid for the exported curvature field; 0 skips the export.
    pub curvature_grid: usize,
}

impl Default for ChernConfig {
    fn default() -> Self {
        Self { curvature_grid: 24 }
    }
}

/// User potentials as `(frequency, re, im)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub id: String,
    pub n: usize,
    #[serde(default)]
    pub v: Vec<(i64, f64, f64)>,
    #[serde(default)]
    pub w: Vec<(i64, f64, f64)>,
    #[serde(default)]
    pub epsilon: f64,
    /// Needed only by `verify`; the predicted index follows from it.
    pub predicted_winding: Option<i64>,
}

impl PotentialSpec {
    pub fn to_scenario(&self) -> Result<Scenario> {
        let winding = self.predicted_winding.unwrap_or(0);
        let record = ScenarioRecord {
            id: self.id.clone(),
            v: TrigRecord { terms: self.v.clone() },
            w: TrigRecord { terms: self.w.clone() },
            n: self.n,
            epsilon: self.epsilon,
            predicted_winding: winding,
            predicted_index: scenarios::gap_sign(self.n) * winding,
        };
        Scenario::from_record(&record).map_err(|e| Error::ConfigInvalid(format!("potential {:?}: {e}", self.id)))
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn in_range<T: PartialOrd + std::fmt::Display + Copy>(name: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v < lo || v > hi {
        return Err(invalid(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(file) = &cfg.potential_file {
            if file.is_relative() {
                cfg.potential_file = Some(path.parent().unwrap_or(Path::new(".")).join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Every budget inside its documented range.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let sources = [self.scenario.is_some(), self.potential.is_some(), self.potential_file.is_some()];
        if sources.iter().filter(|&&s| s).count() > 1 {
            return Err(invalid("give only one of scenario, potential, potential_file"));
        }
        in_range("bands.xi_samples", self.bands.xi_samples, 2, 100_001)?;
        in_range("bands.band_count", self.bands.band_count, 1, 64)?;
        in_range("chern.curvature_grid", self.chern.curvature_grid, 0, 256)?;
        let b = &self.budget;
        if let Some(k) = b.cutoff {
            in_range("budget.cutoff", k, 1, 400)?;
        }
        in_range("budget.chern_grid", b.chern_grid, 4, 512)?;
        if b.chern_s.is_empty() {
            return Err(invalid("budget.chern_s is empty"));
        }
        for &s in &b.chern_s {
            if !(s > 0.0 && s <= 1.0) {
                return Err(invalid(format!("budget.chern_s entry {s} outside (0, 1]")));
            }
        }
        in_range("budget.h1_s_samples", b.h1_s_samples, 1, 256)?;
        in_range("budget.h1_t_samples", b.h1_t_samples, 1, 4096)?;
        in_range("budget.dirac_samples", b.dirac_samples, 8, 4096)?;
        in_range("budget.edge.samples", b.edge.samples, 8, 4096)?;
        in_range("budget.edge.max_depth", b.edge.max_depth, 0, 30)?;
        if !(b.edge.wobble.abs() < 1.0) {
            return Err(invalid(format!("budget.edge.wobble = {} must satisfy |wobble| < 1", b.edge.wobble)));
        }
        for p in [b.dirac_profile, b.edge_profile] {
            if let crate::dirac_line::TransitionProfile::Tanh { width } = p {
                if !(width > 0.0 && width <= 1e3) {
                    return Err(invalid(format!("profile width {width} outside (0, 1000]")));
                }
            }
        }
        if let Some(l) = b.half_length {
            if !(l > 0.0 && l <= 1e5) {
                return Err(invalid(format!("budget.half_length = {l} outside (0, 1e5]")));
            }
        }
        if let Some(f) = b.bump {
            if !(f.half_width > 0.0 && f.height.abs() <= 100.0) {
                return Err(invalid("budget.bump needs half_width > 0 and |height| <= 100"));
            }
        }
        match b.discretization {
            Some(Discretization::FiniteDifference { step }) if !(step > 0.0 && step <= 0.1) => {
                return Err(invalid(format!("finite-difference step {step} outside (0, 0.1]")));
            }
            Some(Discretization::SineSpectral { modes }) if !(8..=8000).contains(&modes) => {
                return Err(invalid(format!("sine modes {modes} outside [8, 8000]")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Scenario selected by `override_id`, else by the configuration's own source.
    pub fn scenario(&self, override_id: Option<&str>) -> Result<Scenario> {
        if let Some(id) = override_id.or(self.scenario.as_deref()) {
            return scenarios::builtin(id);
        }
        if let Some(inline) = &self.potential {
            return inline.to_scenario();
        }
        if let Some(path) = &self.potential_file {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let inline: PotentialSpec = toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            return inline.to_scenario();
        }
        Err(invalid(format!("no scenario given; use --scenario with one of {}", scenarios::BUILTIN_IDS.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("schema_version = 1\nspeed = 3\n"), Err(Error::ConfigInvalid(_))));
        assert!(matches!(RunConfig::parse("[budget]\nchern_grd = 3\n"), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn wrong_schema_and_ranges_are_rejected() {
        assert!(RunConfig::parse("schema_version = 2\n").is_err());
        assert!(RunConfig::parse("[budget]\nchern_grid = 2\n").is_err());
        assert!(RunConfig::parse("[budget]\nchern_s = [1.5]\n").is_err());
        assert!(RunConfig::parse("scenario = \"toy\"\n[potential]\nid = \"x\"\nn = 1\n").is_err());
    }

    #[test]
    fn inline_potential_builds_a_scenario() {
        let cfg = RunConfig::parse("[potential]\nid = \"free\"\nn = 1\nv = []\nw = [[1, 1.0, 0.0], [-1, 1.0, 0.0]]\n").unwrap();
        let sc = cfg.scenario(None).unwrap();
        assert!(sc.v.is_zero());
        assert_eq!(sc.w.bandwidth(), 1);
        assert_eq!(cfg.scenario(Some("toy")).unwrap().id, "toy");
    }
}
