//! Flat TOML run configuration.
//!
//! ```toml
//! scenario = "mode"          # equilibrium | rotating | mode | data
//! n_cells = 128
//! t_end = 10.0
//! gravity = [0.0, 0.0, -1.0]
//! cfl = 0.5                  # or dt = 1e-3 for a fixed step
//! snapshot_dt = 0.01
//! constraint = "project"     # project | monitor
//! mode = 1
//! amplitude = 1e-3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use string_lab::dynamics::{ConstraintMode, DtPolicy, ScenarioConfig};
use string_lab::grid::make_grid;
use string_lab::io::read_data_csv;
use string_lab::scenarios::{equilibrium, hanging_mode, rotating};
use string_lab::{StringState, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Equilibrium,
    Rotating,
    Mode,
    Data,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gravity: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_tol: Option<f64>,
    /// Angular velocity of the rotating scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Mode index and displacement amplitude of the mode scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Initial data CSV for the data scenario, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

impl RunConfig {
    pub fn builtin(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            n_cells: None,
            t_end: None,
            gravity: None,
            dt: None,
            cfl: None,
            snapshot_dt: None,
            constraint: None,
            constraint_tol: None,
            collapse_tol: None,
            omega: None,
            mode: None,
            amplitude: None,
            data: None,
        }
    }

    /// Parse a config file; errors carry the file name and line.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            match line {
                Some(l) => format!("{}:{l}: {}", path.display(), e.message()),
                None => format!("{}: {}", path.display(), e.message()),
            }
        })?;
        if let Some(data) = &cfg.data {
            if data.is_relative() {
                cfg.data = Some(path.parent().unwrap_or(Path::new(".")).join(data));
            }
        }
        Ok(cfg)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig, String> {
        let base = ScenarioConfig::default();
        let gravity = self.gravity.unwrap_or(match self.scenario {
            Scenario::Rotating => [0.0; 3],
            _ => base.gravity,
        });
        let dt = match (self.dt, self.cfl) {
            (Some(_), Some(_)) => return Err("set either dt or cfl, not both".into()),
            (Some(dt), None) => DtPolicy::Fixed(dt),
            (None, Some(c)) => DtPolicy::Cfl(c),
            (None, None) => base.dt,
        };
        let n_cells = match (self.n_cells, self.scenario, &self.data) {
            (Some(n), _, _) => n,
            (None, Scenario::Data, Some(path)) => read_data_csv(path).map_err(|e| e.to_string())?.0.n_cells(),
            _ => base.n_cells,
        };
        let cfg = ScenarioConfig {
            gravity,
            n_cells,
            t_end: self.t_end.unwrap_or(base.t_end),
            dt,
            constraint: self.constraint.unwrap_or(base.constraint),
            snapshot_dt: self.snapshot_dt.unwrap_or(base.snapshot_dt),
            integrator: base.integrator,
            constraint_tol: self.constraint_tol.unwrap_or(base.constraint_tol),
            collapse_tol: self.collapse_tol.unwrap_or(base.collapse_tol),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(1.0)
    }

    pub fn initial_state(&self, cfg: &ScenarioConfig) -> Result<StringState, String> {
        let grid = make_grid(cfg.n_cells).map_err(|e| e.to_string())?;
        Ok(match self.scenario {
            Scenario::Equilibrium => equilibrium(&grid),
            Scenario::Rotating => rotating(&grid, self.omega(), 0.0),
            Scenario::Mode => {
                let k = self.mode.unwrap_or(1);
                if k == 0 {
                    return Err("mode index starts at 1".into());
                }
                hanging_mode(&grid, k, self.amplitude.unwrap_or(1e-3))
            }
            Scenario::Data => {
                let path = self.data.as_ref().ok_or("scenario \"data\" needs a data file")?;
                let (g, x0, x1) = read_data_csv(path).map_err(|e| e.to_string())?;
                if g.n_cells() != cfg.n_cells {
                    return Err(format!(
                        "{} has {} cells but n_cells = {}",
                        path.display(),
                        g.n_cells(),
                        cfg.n_cells
                    ));
                }
                StringState { t: 0.0, x: x0, v: x1 }
            }
        })
    }

    /// Closed-form state at time t, when the scenario has one.
    pub fn exact_state(&self, cfg: &ScenarioConfig, t: f64) -> Option<StringState> {
        let grid = make_grid(cfg.n_cells).ok()?;
        let g = Vec3::from(cfg.gravity);
        match self.scenario {
            Scenario::Equilibrium if g == Vec3::new(0.0, 0.0, -1.0) => Some(equilibrium(&grid)),
            Scenario::Rotating if g == Vec3::zeros() => Some(rotating(&grid, self.omega(), t)),
            _ => None,
        }
    }
}
