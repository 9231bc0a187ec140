use std::path::{Path, PathBuf};

use moyal_core::harness::{check_params, default_params, ElementFamily, Params, SuiteSpec};
use moyal_core::oracle::CLASSICAL_THEOREMS;
use moyal_core::weyl::{H_MAX, H_MIN};
use moyal_core::{Error, GridParams, Result, TheoremId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Shipped defaults; also what `verify` runs without `--config`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Largest Fock truncation accepted from a config.
pub const MAX_FOCK_DIM: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Moyal,
    Classical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoyalSettings {
    pub h: f64,
    pub fock_dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Default for MoyalSettings {
    fn default() -> Self {
        MoyalSettings { h: 1.0, fock_dim: 128, half_width: 8.0, points: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSettings {
    pub half_width: f64,
    pub points: usize,
}

impl Default for ClassicalSettings {
    fn default() -> Self {
        ClassicalSettings { half_width: 64.0, points: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub cases: PathBuf,
    pub summary: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { cases: "results/cases.csv".into(), summary: "results/summary.json".into() }
    }
}

impl OutputSettings {
    pub fn in_dir(dir: &Path) -> Self {
        OutputSettings { cases: dir.join("cases.csv"), summary: dir.join("summary.json") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub theorem: TheoremId,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub first_trial: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl SuiteConfig {
    pub fn new(theorem: TheoremId, trials: u64) -> Self {
        SuiteConfig { theorem, trials, first_trial: 0, params: vec![], h: None, fock_dim: None, half_width: None, points: None }
    }

    pub fn spec(&self) -> SuiteSpec {
        SuiteSpec { id: self.theorem, trials: self.trials, first_trial: self.first_trial, params: self.params.clone() }
    }
}

/// Backend parameters after per-suite overrides.
#[derive(Clone, Debug, PartialEq)]
pub enum BackendSettings {
    Moyal(MoyalSettings),
    Classical(ClassicalSettings),
}

impl BackendSettings {
    pub fn dim(&self) -> usize {
        match self {
            BackendSettings::Moyal(_) => 2,
            BackendSettings::Classical(_) => 1,
        }
    }

    pub fn grid(&self) -> Result<GridParams> {
        match self {
            BackendSettings::Moyal(m) => GridParams::new(2, m.half_width, m.points),
            BackendSettings::Classical(c) => GridParams::new(1, c.half_width, c.points),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub master_seed: u64,
    #[serde(default)]
    pub moyal: MoyalSettings,
    #[serde(default)]
    pub classical: ClassicalSettings,
    #[serde(default)]
    pub family: ElementFamily,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub suites: Vec<SuiteConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_toml(DEFAULT_CONFIG).expect("shipped default config parses")
    }
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization,
    /// output paths excluded.
    pub fn hash(&self) -> Result<String> {
        let canonical = RunConfig { output: OutputSettings::default(), ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn settings_for(&self, suite: &SuiteConfig) -> Result<BackendSettings> {
        match self.backend {
            BackendKind::Moyal => {
                let mut m = self.moyal.clone();
                m.h = suite.h.unwrap_or(m.h);
                m.fock_dim = suite.fock_dim.unwrap_or(m.fock_dim);
                m.half_width = suite.half_width.unwrap_or(m.half_width);
                m.points = suite.points.unwrap_or(m.points);
                Ok(BackendSettings::Moyal(m))
            }
            BackendKind::Classical => {
                if suite.h.is_some() || suite.fock_dim.is_some() {
                    return Err(config_err(format!("suite {}: h and fock_dim do not apply to the classical backend", suite.theorem)));
                }
                let mut c = self.classical.clone();
                c.half_width = suite.half_width.unwrap_or(c.half_width);
                c.points = suite.points.unwrap_or(c.points);
                Ok(BackendSettings::Classical(c))
            }
        }
    }

    /// Checks every field against the gates of the module it feeds. Parameter
    /// range violations surface as `Error::ParameterGate`.
    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        for suite in &self.suites {
            let settings = self.settings_for(suite)?;
            settings.grid()?;
            if let BackendSettings::Moyal(m) = &settings {
                if !(H_MIN..=H_MAX).contains(&m.h) {
                    return Err(config_err(format!("h = {} outside [{H_MIN}, {H_MAX}]", m.h)));
                }
                if m.fock_dim == 0 || m.fock_dim > MAX_FOCK_DIM {
                    return Err(config_err(format!("fock_dim = {} outside [1, {MAX_FOCK_DIM}]", m.fock_dim)));
                }
            }
            if self.backend == BackendKind::Classical && !CLASSICAL_THEOREMS.contains(&suite.theorem) {
                return Err(config_err(format!("{} has no classical case", suite.theorem)));
            }
            if suite.trials == 0 {
                return Err(config_err(format!("suite {}: trials must be at least 1", suite.theorem)));
            }
            let grid = if suite.params.is_empty() { default_params(suite.theorem, settings.dim()) } else { suite.params.clone() };
            for p in &grid {
                check_params(suite.theorem, p, settings.dim())?;
            }
        }
        Ok(())
    }
}
