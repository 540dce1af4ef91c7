//! Run configuration shared by the command-line tools.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{ModelParams, M_H};
use crate::transport::{BoundSettings, Budgets};

/// Table masses: 0.7, 0.8, 0.9, m_H, then 2..8.
pub fn table_masses() -> Vec<f64> {
    vec![0.7, 0.8, 0.9, M_H, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
}

/// Cells left out of bound tables on purpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmitRule {
    pub energy: f64,
    pub mass_above: f64,
    pub reason: String,
}

impl OmitRule {
    pub fn matches(&self, e: f64, m: f64) -> bool {
        e == self.energy && m > self.mass_above
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitFlags {
    pub curves: bool,
    pub projections: bool,
    pub radial_sections: bool,
    pub families: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self { curves: true, projections: true, radial_sections: true, families: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelParams,
    pub energies: Vec<f64>,
    pub masses: Vec<f64>,
    pub couplings: Vec<f64>,
    pub settings: BoundSettings,
    pub budgets: Budgets,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Monte Carlo samples per cell; 0 disables the Monte Carlo columns.
    pub mc_samples: usize,
    pub jobs: Option<usize>,
    pub omit: Vec<OmitRule>,
    pub emit: EmitFlags,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            energies: vec![0.5, 1.0, 2.0],
            masses: table_masses(),
            couplings: (1..=8).map(f64::from).collect(),
            settings: BoundSettings::default(),
            budgets: Budgets::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            mc_samples: 0,
            jobs: None,
            omit: vec![OmitRule {
                energy: 0.5,
                mass_above: 4.0,
                reason: "not tabulated: outer orbit too weakly unstable".into(),
            }],
            emit: EmitFlags::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.energies.is_empty() || self.masses.is_empty() || self.couplings.is_empty() {
            return Err(Error::Config("energy, mass and coupling grids must be non-empty".into()));
        }
        for &m in &self.masses {
            self.model.with_mass(m).validate()?;
        }
        for &a in &self.couplings {
            self.model.with_coupling(a).validate()?;
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("energies must be finite".into()));
        }
        self.settings.orbit.tol.validate()?;
        self.settings.manifold.tol.validate()?;
        let m = &self.settings.manifold;
        if !(m.epsilon_inner > 0.0 && m.epsilon_outer > 0.0 && m.spacing > 0.0 && m.n_seeds > 0) {
            return Err(Error::Config("manifold settings must be positive".into()));
        }
        if !(self.budgets.t_max > 0.0) || self.budgets.max_crossings == 0 {
            return Err(Error::Config("budgets must be positive".into()));
        }
        if self.mc_samples != 0 && self.mc_samples < 1000 {
            return Err(Error::Config("Monte Carlo needs at least 1000 samples".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self, m: f64, a: f64) -> ModelParams {
        self.model.with_mass(m).with_coupling(a)
    }

    pub fn omitted(&self, e: f64, m: f64) -> Option<&OmitRule> {
        self.omit.iter().find(|r| r.matches(e, m))
    }
}
