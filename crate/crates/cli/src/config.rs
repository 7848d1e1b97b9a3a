//! Scenario configuration files.
//!
//! A config is one TOML document.  Every key is optional; a missing key
//! takes the value of the reference single-meal example, so an empty file
//! describes that example.  Unknown keys are rejected.
//!
//! ```toml
//! [model]
//! insulin_absorption = 0.0204      # d (1/min)
//! insulin_gain = 497.5124          # k
//! plasma_rate = 0.0213             # c (1/min)
//! action_rate = 0.0106             # a (1/min)
//! sensitivity = 8.11e-4            # b
//! glucose_effectiveness = 0.0032   # G (1/min)
//! endogenous_production = 1.3      # E (mg/dl/min)
//! meal_gain = 0.0018
//! meal_tau = 47.0                  # min
//! meal_coupling = 1.0              # f2 -> f1 rate (1/min)
//!
//! [scenario]
//! g_inf = 100.0                    # steady and initial glucose (mg/dl)
//! lambda = 80.0                    # floor (mg/dl)
//! tau = 10.0                       # pulse duration (min)
//!
//! [[meals]]                        # `meals = []` for none
//! time = 500.0
//! magnitude = 120.0
//!
//! [grid]
//! dt = 0.1                         # min
//! # horizon = 2400.0               # default: settling time after the last event
//!
//! [tolerances]
//! value = 0.05                     # mg/dl
//! slope = 1e-4                     # mg/dl/min
//! solver = 1e-8                    # input units
//! gamma = 0.5                      # mg/dl
//! bolus_cap = 1e4
//!
//! [bolus]
//! t_prime = 445.0
//!
//! [sweep]
//! lo = 350.0
//! hi = 520.0
//! step = 5.0
//!
//! [seesaw]
//! t_prime = 445.0
//! lambdas = [70.0, 75.0, 80.0, 85.0, 90.0]
//!
//! [plan]
//! times = [444.9]
//! # balance = [1350.0, 1400.0]     # bisect one extra, last delivery time here
//!
//! [saturation]
//! lo = 350.0
//! hi = 1000.0
//! step = 25.0
//! max_pulses = 3
//!
//! [simulate]
//! pulses = []                      # [{ time = 445.0, magnitude = 1.2 }]
//! ```

use std::path::Path;

use glucopt_core::{Grid, MealImpulse, MealModel, ModelParams, Scenario, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Configs shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("example_sec6", include_str!("../configs/example_sec6.toml")),
    ("two_meal", include_str!("../configs/two_meal.toml")),
    ("no_meal", include_str!("../configs/no_meal.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub scenario: ScenarioSection,
    pub meals: Vec<MealEntry>,
    pub grid: GridSection,
    pub tolerances: ToleranceSection,
    pub bolus: BolusSection,
    pub sweep: SweepSection,
    pub seesaw: SeesawSection,
    pub plan: PlanSection,
    pub saturation: SaturationSection,
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub insulin_absorption: f64,
    pub insulin_gain: f64,
    pub plasma_rate: f64,
    pub action_rate: f64,
    pub sensitivity: f64,
    pub glucose_effectiveness: f64,
    pub endogenous_production: f64,
    pub meal_gain: f64,
    pub meal_tau: f64,
    pub meal_coupling: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::example();
        Self {
            insulin_absorption: p.insulin_absorption,
            insulin_gain: p.insulin_gain,
            plasma_rate: p.plasma_rate,
            action_rate: p.action_rate,
            sensitivity: p.sensitivity,
            glucose_effectiveness: p.glucose_effectiveness,
            endogenous_production: p.endogenous_production,
            meal_gain: p.meal_gain,
            meal_tau: p.meal_tau,
            meal_coupling: p.meal_coupling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub g_inf: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            g_inf: 100.0,
            lambda: 80.0,
            tau: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MealEntry {
    pub time: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dt: Grid::DEFAULT_DT,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    pub value: f64,
    pub slope: f64,
    pub solver: f64,
    pub gamma: f64,
    pub bolus_cap: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            value: t.value,
            slope: t.slope,
            solver: t.solver,
            gamma: t.gamma,
            bolus_cap: t.bolus_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BolusSection {
    pub t_prime: f64,
}

impl Default for BolusSection {
    fn default() -> Self {
        Self { t_prime: 445.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lo: 350.0,
            hi: 520.0,
            step: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeesawSection {
    pub t_prime: f64,
    pub lambdas: Vec<f64>,
}

impl Default for SeesawSection {
    fn default() -> Self {
        Self {
            t_prime: 445.0,
            lambdas: vec![70.0, 75.0, 80.0, 85.0, 90.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<[f64; 2]>,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            times: vec![444.9],
            balance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaturationSection {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub max_pulses: usize,
}

impl Default for SaturationSection {
    fn default() -> Self {
        Self {
            lo: 350.0,
            hi: 1000.0,
            step: 25.0,
            max_pulses: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub pulses: Vec<PulseEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEntry {
    pub time: f64,
    pub magnitude: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            scenario: ScenarioSection::default(),
            meals: vec![MealEntry {
                time: 500.0,
                magnitude: 120.0,
            }],
            grid: GridSection::default(),
            tolerances: ToleranceSection::default(),
            bolus: BolusSection::default(),
            sweep: SweepSection::default(),
            seesaw: SeesawSection::default(),
            plan: PlanSection::default(),
            saturation: SaturationSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Loads `spec`, which is either a bundled config name or a path.
    pub fn load(spec: &str) -> Result<Self, CliError> {
        if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == spec) {
            return Self::parse(text);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            insulin_absorption: m.insulin_absorption,
            insulin_gain: m.insulin_gain,
            plasma_rate: m.plasma_rate,
            action_rate: m.action_rate,
            sensitivity: m.sensitivity,
            glucose_effectiveness: m.glucose_effectiveness,
            endogenous_production: m.endogenous_production,
            meal_gain: m.meal_gain,
            meal_tau: m.meal_tau,
            meal_coupling: m.meal_coupling,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let t = &self.tolerances;
        Tolerances {
            value: t.value,
            slope: t.slope,
            solver: t.solver,
            bolus_cap: t.bolus_cap,
            gamma: t.gamma,
        }
    }

    /// Builds the scenario.  Without an explicit horizon the grid runs
    /// until the model settles after the last meal or delivery in the
    /// config.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let params = self.params();
        params.validate().map_err(config_error)?;
        let meals = MealModel::new(
            self.meals
                .iter()
                .map(|m| MealImpulse {
                    time: m.time,
                    magnitude: m.magnitude,
                })
                .collect(),
        )
        .map_err(config_error)?;
        let grid = match self.grid.horizon {
            Some(h) => Grid::new(self.grid.dt, h),
            None => Grid::settling(&params, meals.last_event(), self.grid.dt),
        }
        .map_err(config_error)?;
        Ok(Scenario::new(params, meals, self.scenario.g_inf, grid)
            .map_err(config_error)?
            .with_tolerances(self.tolerances()))
    }
}

fn config_error(e: glucopt_core::Error) -> CliError {
    CliError::Config(e.to_string())
}
