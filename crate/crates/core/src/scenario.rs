//! Named scenarios: the reference parameterization and prediction overlays.
//!
//! Every scenario runs the baseline risk factor with moderate therapy up to
//! and including the switch year (2006); from the following year it applies
//! its own risk factor and therapy mode. Explicit per-year schedules can
//! override the two-phase rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::disease::TherapyMode;
use crate::error::{Error, Result};

/// Baseline risk-behavior factor (the 2000-2005 level).
pub const BASELINE_RISK: f64 = 1.30;

/// Last simulated year that uses baseline factors in every scenario.
pub const DEFAULT_SWITCH_YEAR: i32 = 2006;

/// Per-parameter overrides a scenario may apply on top of the base config.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub p_diag: Option<f64>,
    pub p_form: Option<f64>,
    pub p_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// Risk factor in force through the switch year.
    pub baseline_risk: f64,
    /// Last year of the baseline phase.
    pub switch_year: i32,
    /// Risk factor from `switch_year + 1` onward.
    pub post_risk: f64,
    /// Therapy mode from `switch_year + 1` onward (moderate before).
    pub post_therapy: TherapyMode,
    /// Optional explicit year-by-year schedules; when present they take
    /// precedence over the two-phase rule for the listed years.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub risk_schedule: BTreeMap<i32, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub therapy_schedule: BTreeMap<i32, TherapyMode>,
    #[serde(default)]
    pub overrides: ScenarioOverrides,
}

impl ScenarioSpec {
    /// A two-phase scenario with the default baseline and switch year.
    pub fn two_phase(name: &str, post_risk: f64, post_therapy: TherapyMode) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            baseline_risk: BASELINE_RISK,
            switch_year: DEFAULT_SWITCH_YEAR,
            post_risk,
            post_therapy,
            risk_schedule: BTreeMap::new(),
            therapy_schedule: BTreeMap::new(),
            overrides: ScenarioOverrides::default(),
        }
    }

    /// Risk factor and therapy mode in force for `year`.
    pub fn factors(&self, year: i32) -> (f64, TherapyMode) {
        let risk = self.risk_schedule.get(&year).copied().unwrap_or({
            if year <= self.switch_year {
                self.baseline_risk
            } else {
                self.post_risk
            }
        });
        let therapy = self.therapy_schedule.get(&year).copied().unwrap_or({
            if year <= self.switch_year {
                TherapyMode::Moderate
            } else {
                self.post_therapy
            }
        });
        (risk, therapy)
    }
}

/// Risk factor and therapy mode for one scenario-year.
pub fn scenario_factors(scenario: &ScenarioSpec, year: i32) -> (f64, TherapyMode) {
    scenario.factors(year)
}

/// The six published scenarios. Prediction factors scale the 2000-2005
/// risk level 1.30 by 5%, 10%, 20% and 30%.
pub fn presets() -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec::two_phase("rs", BASELINE_RISK, TherapyMode::Moderate),
        ScenarioSpec::two_phase("p1", 1.365, TherapyMode::Moderate),
        ScenarioSpec::two_phase("p2", 1.365, TherapyMode::Optimistic),
        ScenarioSpec::two_phase("p3", 1.43, TherapyMode::Optimistic),
        ScenarioSpec::two_phase("p4", 1.56, TherapyMode::Optimistic),
        ScenarioSpec::two_phase("p5", 1.69, TherapyMode::Optimistic),
    ]
}

/// Look up a preset by its lowercase name.
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    presets()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            Error::config(
                format!("scenarios.{name}"),
                "unknown scenario: expected rs, p1..p5 or a scenario defined in the config file",
            )
        })
}
