use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::Scenario;
use crate::network::Route;
use crate::solver::NumericOptions;
use crate::su::{validate, Formulation, Preferences, ReferenceProfile, Violation};
use crate::time::{Duration, TimePoint};

pub const DEFAULT_CONFIG: &str = include_str!("../../examples/p0k0.json");
pub const DEFAULT_SCENARIO: &str = include_str!("../../examples/case1.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverDefaults {
    pub grid_step: f64,
    pub refine_tol: f64,
    pub depart_grid: f64,
}

impl Default for SolverDefaults {
    fn default() -> Self {
        let numeric = NumericOptions::default();
        SolverDefaults {
            grid_step: numeric.grid_step,
            refine_tol: numeric.refine_tol,
            depart_grid: 0.1,
        }
    }
}

impl SolverDefaults {
    pub fn numeric(&self) -> NumericOptions {
        NumericOptions {
            grid_step: self.grid_step,
            refine_tol: self.refine_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub profile: ReferenceProfile,
    pub preferences: Preferences,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub solver: SolverDefaults,
}

/// A parsed configuration together with its non-blocking warnings.
pub struct LoadedConfig {
    pub config: Config,
    pub warnings: Vec<Violation>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<LoadedConfig, CliError> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))?;
        let (blocking, warnings): (Vec<_>, Vec<_>) = validate(&config.profile, &config.preferences)
            .into_iter()
            .partition(Violation::is_blocking);
        if !blocking.is_empty() {
            return Err(CliError::Validation(blocking));
        }
        Ok(LoadedConfig { config, warnings })
    }

    pub fn load(path: Option<&Path>) -> Result<LoadedConfig, CliError> {
        match path {
            Some(p) => Config::from_json(&read(p)?),
            None => Config::from_json(DEFAULT_CONFIG),
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct RoutesFile {
    routes: Vec<Route>,
}

pub fn load_routes(path: &Path) -> Result<Vec<Route>, CliError> {
    let file: RoutesFile = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    for route in &file.routes {
        route
            .validate()
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    }
    if file.routes.is_empty() {
        return Err(CliError::Parse(format!("{}: no routes", path.display())));
    }
    Ok(file.routes)
}

#[derive(Deserialize)]
struct ScenarioEntry {
    label: Option<String>,
    depart: TimePoint,
    travel: Duration,
}

#[derive(Deserialize)]
struct ScenarioFile {
    scenarios: Vec<ScenarioEntry>,
}

pub fn parse_scenarios(text: &str, origin: &str) -> Result<Vec<Scenario>, CliError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{origin}: {e}")))?;
    if file.scenarios.is_empty() {
        return Err(CliError::Parse(format!("{origin}: scenario list is empty")));
    }
    Ok(file
        .scenarios
        .into_iter()
        .enumerate()
        .map(|(i, e)| Scenario {
            label: e.label.unwrap_or_else(|| format!("scenario{}", i + 1)),
            depart: e.depart,
            travel: e.travel,
        })
        .collect())
}
