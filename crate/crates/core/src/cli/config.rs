use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::integrator::Tolerances;
use crate::model::{CostParams, EpidemicParams, Resources, Scenario, SirdState};
use crate::optimizer::{CostHorizon, SearchOptions, DEFAULT_OPT_TOL};

use super::CliError;

const VARIANT1: &str = include_str!("../../configs/variant1.json");
const VARIANT2: &str = include_str!("../../configs/variant2.json");

pub const PRESETS: [&str; 2] = ["variant1", "variant2"];

fn default_opt_tol() -> f64 {
    DEFAULT_OPT_TOL
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

/// Everything a run needs, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub epidemic: EpidemicParams,
    pub cost: CostParams,
    pub resources: Resources,
    pub initial: SirdState,
    pub horizon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_opt_tol")]
    pub opt_tol: f64,
    #[serde(default)]
    pub cost_horizon: CostHorizon,
    /// Population size for head-count output columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
    #[serde(default, skip_serializing_if = "is_default_paths")]
    pub output: OutputPaths,
}

fn is_default_paths(p: &OutputPaths) -> bool {
    *p == OutputPaths::default()
}

fn section<T>(name: &str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Validation(format!("{name}: {e}")))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "variant1" => Self::from_json(VARIANT1),
            "variant2" => Self::from_json(VARIANT2),
            other => Err(CliError::Validation(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        section("epidemic", self.epidemic.validate())?;
        section("cost", self.cost.validate())?;
        section("resources", self.resources.validate())?;
        section("initial", self.initial.validate())?;
        section("tolerances", self.tolerances.validate())?;
        section("horizon", self.scenario().validate())?;
        if !(self.opt_tol.is_finite() && self.opt_tol > 0.0) {
            return Err(CliError::Validation(format!(
                "opt_tol: must be > 0, got {}",
                self.opt_tol
            )));
        }
        if let Some(n) = self.population {
            if !(n.is_finite() && n > 0.0) {
                return Err(CliError::Validation(format!(
                    "population: must be > 0, got {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            epidemic: self.epidemic,
            cost: self.cost,
            initial: self.initial,
            horizon: self.horizon,
        }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions {
            opt_tol: self.opt_tol,
            horizon: self.cost_horizon,
            ..SearchOptions::default()
        }
    }
}
