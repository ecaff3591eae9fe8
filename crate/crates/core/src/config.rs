//! Scenario description and its TOML file format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::devices::{ErhModel, EssModel, EwhModel};
use crate::domain::{BinningScheme, Edges, Tariff};
use crate::error::{Error, Result};
use crate::objective::{DEFAULT_EPSILON, DEFAULT_LINK_GAP, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeviceSpec {
    Ess(EssModel),
    Ewh(EwhModel),
    Erh(ErhModel),
}

impl DeviceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceSpec::Ess(_) => "ess",
            DeviceSpec::Ewh(_) => "ewh",
            DeviceSpec::Erh(_) => "erh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub m: usize,
    pub n: usize,
    pub y_min: f64,
    pub y_max: f64,
    /// Upper X edge; taken from the sensitive-load profile when absent.
    pub x_max: Option<f64>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            m: 24,
            n: 24,
            y_min: 0.0,
            y_max: 12.0,
            x_max: None,
        }
    }
}

impl BinningConfig {
    pub fn scheme(&self, x: &[f64]) -> Result<BinningScheme> {
        let x_max = match self.x_max {
            Some(v) => v,
            None => x.iter().copied().fold(0.0, f64::max),
        };
        if !(x_max > 0.0) {
            return Err(Error::Config("sensitive load is identically zero; set binning.x_max".into()));
        }
        Ok(BinningScheme::new(
            Edges::uniform(0.0, x_max, self.m)?,
            Edges::uniform(self.y_min, self.y_max, self.n)?,
        ))
    }
}

/// CSV inputs, one file per role. Relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub load: Option<PathBuf>,
    pub draws: Option<PathBuf>,
    pub outdoor_temp: Option<PathBuf>,
    pub irradiance: Option<PathBuf>,
}

impl InputPaths {
    pub fn is_empty(&self) -> bool {
        self.load.is_none() && self.draws.is_none() && self.outdoor_temp.is_none() && self.irradiance.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub devices: Vec<DeviceSpec>,
    pub tariff: Tariff,
    pub horizon: usize,
    pub mu: f64,
    pub rho: f64,
    pub include_energy_cost: bool,
    pub binning: BinningConfig,
    pub window: usize,
    pub epsilon: f64,
    pub link_gap: f64,
    /// Relative gap at which a control step's MIQP stops.
    pub mip_gap: f64,
    /// Branch-and-bound nodes per control step.
    pub mip_nodes: usize,
    /// Smoothing used when scoring runs (not when controlling).
    pub score_epsilon: f64,
    pub days: usize,
    /// Indoor air seen by a water heater when no space heater is modelled.
    pub indoor_temp: f64,
    /// Dispatch thermal duties as 5-minute on/off cycles.
    pub step_load: bool,
    pub archetype: String,
    pub seed: u64,
    pub inputs: InputPaths,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            devices: Vec::new(),
            tariff: Tariff::default(),
            horizon: 24,
            mu: 5.0,
            rho: 10.0,
            include_energy_cost: true,
            binning: BinningConfig::default(),
            window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
            link_gap: DEFAULT_LINK_GAP,
            mip_gap: 1e-4,
            mip_nodes: 8,
            score_epsilon: 0.0,
            days: 30,
            indoor_temp: 20.0,
            step_load: false,
            archetype: "house-23618-like".into(),
            seed: 23618,
            inputs: InputPaths::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config(format!("horizon must be at least 2, got {}", self.horizon)));
        }
        if !(self.mu >= 0.0) || !(self.rho >= 0.0) {
            return Err(Error::Config("mu and rho must be nonnegative".into()));
        }
        if self.window == 0 || self.days == 0 {
            return Err(Error::Config("window and days must be positive".into()));
        }
        if !(self.epsilon >= 0.0) || !(self.score_epsilon >= 0.0) || !(self.link_gap >= 0.0) {
            return Err(Error::Config("smoothing constants and link gap must be nonnegative".into()));
        }
        if !(self.mip_gap >= 0.0) || self.mip_nodes == 0 {
            return Err(Error::Config("mip_gap must be nonnegative and mip_nodes positive".into()));
        }
        if self.binning.m == 0 || self.binning.n == 0 || !(self.binning.y_max > self.binning.y_min) {
            return Err(Error::Config("invalid binning".into()));
        }
        self.tariff.validate()?;
        let count = |k: &str| self.devices.iter().filter(|d| d.name() == k).count();
        if count("ess") > 1 || count("ewh") > 1 || count("erh") > 1 {
            return Err(Error::Config("each device kind may appear at most once".into()));
        }
        if count("ess") == 1 && self.devices.len() > 1 {
            return Err(Error::Config("storage cannot be combined with thermal loads".into()));
        }
        for d in &self.devices {
            match d {
                DeviceSpec::Ess(m) => m.validate()?,
                DeviceSpec::Ewh(m) => m.validate()?,
                DeviceSpec::Erh(m) => m.validate()?,
            }
        }
        Ok(())
    }

    pub fn ess(&self) -> Option<&EssModel> {
        self.devices.iter().find_map(|d| match d {
            DeviceSpec::Ess(m) => Some(m),
            _ => None,
        })
    }

    pub fn ewh(&self) -> Option<&EwhModel> {
        self.devices.iter().find_map(|d| match d {
            DeviceSpec::Ewh(m) => Some(m),
            _ => None,
        })
    }

    pub fn erh(&self) -> Option<&ErhModel> {
        self.devices.iter().find_map(|d| match d {
            DeviceSpec::Erh(m) => Some(m),
            _ => None,
        })
    }

    /// Short label of the device set, e.g. `ess`, `ewh+erh` or `none`.
    pub fn system_label(&self) -> String {
        if self.devices.is_empty() {
            return "none".into();
        }
        self.devices.iter().map(|d| d.name()).collect::<Vec<_>>().join("+")
    }

    /// Tariff used in the objective: zero prices when costs are ignored.
    pub fn objective_tariff(&self) -> Tariff {
        if self.include_energy_cost {
            self.tariff.clone()
        } else {
            Tariff::zero()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative input paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.inputs.load,
            &mut cfg.inputs.draws,
            &mut cfg.inputs.outdoor_temp,
            &mut cfg.inputs.irradiance,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
