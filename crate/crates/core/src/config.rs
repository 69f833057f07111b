//! Model configuration: every parameter with its published default, JSON
//! ingestion with unknown-key rejection, and range validation that names
//! the offending key.
//!
//! An empty document resolves to the full default parameterization, so
//! `{}` (or an empty file) reproduces the reference setup: 2299 men, the
//! gamma = 1.6 truncated power-law network, Table-1 stage durations and
//! per-act probabilities, 1985-2044 with 30 realizations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::disease::{DiseaseParams, TherapyMode};
use crate::error::{Error, Result};
use crate::partnerships::ActParams;
pub use crate::partnerships::PartnerPool;
use crate::scenario::{self, ScenarioOverrides, ScenarioSpec};
use crate::stochastics::DistributionSpec;
use crate::transmission::PerActBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedingMode {
    /// Initial positives land on uniformly chosen nodes.
    DegreeUniform,
    /// Initial positives land on nodes chosen proportionally to degree.
    DegreeWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Cohort size, held constant by death-replacement.
    pub size: u32,
    /// HIV-positive individuals at the 1984 initialization.
    pub initial_infected: u32,
    /// Fraction of initial positives that start diagnosed.
    pub initial_diagnosed_fraction: f64,
    pub seeding: SeedingMode,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            size: 2299,
            initial_infected: 571,
            initial_diagnosed_fraction: 0.4,
            seeding: SeedingMode::DegreeUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Power-law exponent of the degree distribution.
    pub gamma: f64,
    /// Maximum node degree.
    pub k_max: u32,
    /// Fraction of men with no sexual contacts at all.
    pub p_zero: f64,
    /// Share one degree sequence across all realizations instead of
    /// drawing one per realization.
    pub shared_network: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            gamma: 1.6,
            k_max: 200,
            p_zero: 0.01,
            shared_network: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiseaseConfig {
    /// Yearly diagnosis hazard for undiagnosed infected men. Calibrated so
    /// the emergent diagnosed fraction settles near 0.41.
    pub p_diag: f64,
    /// Probability that a started treatment succeeds.
    pub p_success: f64,
    /// First calendar year in which treatment can start.
    pub treatment_start_year: i32,
    /// AP duration for the untreated or treatment-failed.
    pub ap_untreated: DistributionSpec,
    /// AP duration after a successful treatment.
    pub ap_treated: DistributionSpec,
    /// AIDS-stage duration until death.
    pub aids_duration: DistributionSpec,
    /// Whether AIDS-stage men still take part in sexual acts.
    pub aids_sexually_active: bool,
}

impl Default for DiseaseConfig {
    fn default() -> Self {
        DiseaseConfig {
            p_diag: 0.0375,
            p_success: 0.9,
            treatment_start_year: 1985,
            ap_untreated: DistributionSpec::Binomial { n: 26, p: 0.5 },
            ap_treated: DistributionSpec::Binomial { n: 52, p: 0.5 },
            aids_duration: DistributionSpec::DiscreteUniform { lo: 1, hi: 2 },
            aids_sexually_active: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartnershipConfig {
    /// Yearly probability that an unpartnered man attempts to form a
    /// steady partnership. Calibrated jointly with the diagnosis hazard
    /// against the reference incidence level.
    pub p_form: f64,
    /// Steady-partnership duration in years.
    pub duration: DistributionSpec,
    /// Where steady partners are drawn from.
    pub partner_pool: PartnerPool,
    /// Steady-pair acts per year with the source at AP.
    pub acts_steady_ap: DistributionSpec,
    /// Steady-pair acts in the PI window of the infection year.
    pub acts_pi_window: DistributionSpec,
    /// Steady-pair acts in the remainder of the infection year.
    pub acts_pi_remainder: DistributionSpec,
    /// Fraction of the infection year covered by the PI window.
    pub pi_window_fraction: f64,
    /// Let infections acquired this year transmit within the same year.
    pub within_year_chains: bool,
}

impl Default for PartnershipConfig {
    fn default() -> Self {
        PartnershipConfig {
            p_form: 0.01,
            duration: DistributionSpec::DiscreteUniform { lo: 1, hi: 2 },
            partner_pool: PartnerPool::Neighbors,
            acts_steady_ap: DistributionSpec::Poisson { lambda: 30.0 },
            acts_pi_window: DistributionSpec::Poisson { lambda: 8.0 },
            acts_pi_remainder: DistributionSpec::Poisson { lambda: 22.0 },
            pi_window_fraction: 0.25,
            within_year_chains: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionConfig {
    /// Per-act transmission probabilities by pricing window and act type.
    pub base: PerActBase,
    /// Reduction on casual acts when either partner is in a steady
    /// partnership (safety agreements).
    pub agreement_factor: f64,
    /// Susceptibility coefficient of the susceptible partner.
    pub susceptibility: f64,
    /// Treatment-induced infectivity reduction, moderate regimen.
    pub moderate_reduction: (f64, f64),
    /// Treatment-induced infectivity reduction, optimistic regimen.
    pub optimistic_reduction: (f64, f64),
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        TransmissionConfig {
            base: PerActBase::default(),
            agreement_factor: 0.84,
            susceptibility: 1.0,
            moderate_reduction: (0.1, 0.5),
            optimistic_reduction: (0.01, 0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// First simulated year (the state is initialized to the year before).
    pub start_year: i32,
    /// Last simulated year, inclusive.
    pub end_year: i32,
    /// Independent realizations averaged per scenario.
    pub realizations: u32,
    /// Master seed; command-line and environment settings take precedence.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            start_year: 1985,
            end_year: 2044,
            realizations: 30,
            seed: None,
        }
    }
}

/// A user-defined scenario block in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioDef {
    pub switch_year: i32,
    /// Risk factor through the switch year.
    pub baseline_risk: f64,
    /// Risk factor from the year after the switch year.
    pub risk_factor: f64,
    /// Therapy mode from the year after the switch year.
    pub therapy: TherapyMode,
    pub risk_schedule: BTreeMap<i32, f64>,
    pub therapy_schedule: BTreeMap<i32, TherapyMode>,
    pub overrides: ScenarioOverrides,
}

impl Default for ScenarioDef {
    fn default() -> Self {
        ScenarioDef {
            switch_year: scenario::DEFAULT_SWITCH_YEAR,
            baseline_risk: scenario::BASELINE_RISK,
            risk_factor: scenario::BASELINE_RISK,
            therapy: TherapyMode::Moderate,
            risk_schedule: BTreeMap::new(),
            therapy_schedule: BTreeMap::new(),
            overrides: ScenarioOverrides::default(),
        }
    }
}

impl ScenarioDef {
    pub fn resolve(&self, name: &str) -> ScenarioSpec {
        ScenarioSpec {
            name: name.to_string(),
            baseline_risk: self.baseline_risk,
            switch_year: self.switch_year,
            post_risk: self.risk_factor,
            post_therapy: self.therapy,
            risk_schedule: self.risk_schedule.clone(),
            therapy_schedule: self.therapy_schedule.clone(),
            overrides: self.overrides,
        }
    }

    pub fn from_spec(spec: &ScenarioSpec) -> ScenarioDef {
        ScenarioDef {
            switch_year: spec.switch_year,
            baseline_risk: spec.baseline_risk,
            risk_factor: spec.post_risk,
            therapy: spec.post_therapy,
            risk_schedule: spec.risk_schedule.clone(),
            therapy_schedule: spec.therapy_schedule.clone(),
            overrides: spec.overrides,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub population: PopulationConfig,
    pub network: NetworkConfig,
    pub disease: DiseaseConfig,
    pub partnerships: PartnershipConfig,
    pub transmission: TransmissionConfig,
    pub simulation: RunConfig,
    pub scenarios: BTreeMap<String, ScenarioDef>,
}

impl SimulationConfig {
    /// Parse a JSON config document. An empty document yields the full
    /// default parameterization; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let config: SimulationConfig = if text.trim().is_empty() {
            SimulationConfig::default()
        } else {
            serde_json::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |path: &str, v: f64| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(
                    path,
                    format!("probability out of [0, 1]: {v}"),
                ))
            }
        };

        if self.population.size < 2 {
            return Err(Error::config("population.size", "population must be >= 2"));
        }
        if self.population.initial_infected > self.population.size {
            return Err(Error::config(
                "population.initial_infected",
                format!(
                    "{} exceeds population size {}",
                    self.population.initial_infected, self.population.size
                ),
            ));
        }
        prob(
            "population.initial_diagnosed_fraction",
            self.population.initial_diagnosed_fraction,
        )?;

        if !self.network.gamma.is_finite() || self.network.gamma <= 0.0 {
            return Err(Error::config(
                "network.gamma",
                format!("exponent must be > 0, got {}", self.network.gamma),
            ));
        }
        if self.network.k_max < 1 {
            return Err(Error::config(
                "network.k_max",
                "maximum degree must be >= 1",
            ));
        }
        prob("network.p_zero", self.network.p_zero)?;

        prob("disease.p_diag", self.disease.p_diag)?;
        prob("disease.p_success", self.disease.p_success)?;
        for (path, dist) in [
            ("disease.ap_untreated", &self.disease.ap_untreated),
            ("disease.ap_treated", &self.disease.ap_treated),
            ("disease.aids_duration", &self.disease.aids_duration),
            ("partnerships.duration", &self.partnerships.duration),
            (
                "partnerships.acts_steady_ap",
                &self.partnerships.acts_steady_ap,
            ),
            (
                "partnerships.acts_pi_window",
                &self.partnerships.acts_pi_window,
            ),
            (
                "partnerships.acts_pi_remainder",
                &self.partnerships.acts_pi_remainder,
            ),
        ] {
            dist.validate()
                .map_err(|e| Error::config(path, e.to_string()))?;
            if matches!(
                dist,
                DistributionSpec::ContinuousUniform { .. }
                    | DistributionSpec::PowerLawDegree { .. }
            ) {
                return Err(Error::config(
                    path,
                    "an integer-valued distribution is required",
                ));
            }
        }

        prob("partnerships.p_form", self.partnerships.p_form)?;
        prob(
            "partnerships.pi_window_fraction",
            self.partnerships.pi_window_fraction,
        )?;

        for (path, v) in [
            ("transmission.base.pi_urai", self.transmission.base.pi_urai),
            ("transmission.base.pi_uiai", self.transmission.base.pi_uiai),
            ("transmission.base.ap_urai", self.transmission.base.ap_urai),
            ("transmission.base.ap_uiai", self.transmission.base.ap_uiai),
        ] {
            prob(path, v)?;
        }
        if !(self.transmission.agreement_factor > 0.0 && self.transmission.agreement_factor <= 1.0)
        {
            return Err(Error::config(
                "transmission.agreement_factor",
                format!(
                    "must be in (0, 1], got {}",
                    self.transmission.agreement_factor
                ),
            ));
        }
        if !(self.transmission.susceptibility > 0.0 && self.transmission.susceptibility <= 1.0) {
            return Err(Error::config(
                "transmission.susceptibility",
                format!(
                    "must be in (0, 1], got {}",
                    self.transmission.susceptibility
                ),
            ));
        }
        for (path, (lo, hi)) in [
            (
                "transmission.moderate_reduction",
                self.transmission.moderate_reduction,
            ),
            (
                "transmission.optimistic_reduction",
                self.transmission.optimistic_reduction,
            ),
        ] {
            if !(0.0 < lo && lo <= hi && hi <= 1.0) {
                return Err(Error::config(
                    path,
                    format!("bounds must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"),
                ));
            }
        }

        if self.simulation.start_year >= self.simulation.end_year {
            return Err(Error::config(
                "simulation.start_year",
                format!(
                    "start year {} must precede end year {}",
                    self.simulation.start_year, self.simulation.end_year
                ),
            ));
        }
        if self.simulation.realizations < 1 {
            return Err(Error::config("simulation.realizations", "must be >= 1"));
        }

        for (name, def) in &self.scenarios {
            let path = format!("scenarios.{name}");
            if !def.risk_factor.is_finite()
                || def.risk_factor <= 0.0
                || !def.baseline_risk.is_finite()
                || def.baseline_risk <= 0.0
            {
                return Err(Error::config(path, "risk factors must be > 0"));
            }
            if def
                .risk_schedule
                .values()
                .any(|&r| !r.is_finite() || r <= 0.0)
            {
                return Err(Error::config(
                    format!("{path}.risk_schedule"),
                    "risk factors must be > 0",
                ));
            }
            for (field, value) in [
                ("p_diag", def.overrides.p_diag),
                ("p_form", def.overrides.p_form),
                ("p_success", def.overrides.p_success),
            ] {
                if let Some(v) = value {
                    prob(&format!("{path}.overrides.{field}"), v)?;
                }
            }
        }
        Ok(())
    }

    /// Resolve a scenario name: user-defined blocks shadow presets.
    pub fn resolve_scenario(&self, name: &str) -> Result<ScenarioSpec> {
        if let Some(def) = self.scenarios.get(name) {
            return Ok(def.resolve(name));
        }
        scenario::preset(name)
    }

    /// Copy of this config with a scenario's parameter overrides applied.
    pub fn with_overrides(&self, overrides: &ScenarioOverrides) -> SimulationConfig {
        let mut config = self.clone();
        if let Some(p) = overrides.p_diag {
            config.disease.p_diag = p;
        }
        if let Some(p) = overrides.p_form {
            config.partnerships.p_form = p;
        }
        if let Some(p) = overrides.p_success {
            config.disease.p_success = p;
        }
        config
    }

    pub fn disease_params(&self) -> DiseaseParams {
        DiseaseParams {
            p_diag: self.disease.p_diag,
            p_success: self.disease.p_success,
            ap_untreated: self.disease.ap_untreated,
            ap_treated: self.disease.ap_treated,
            aids_duration: self.disease.aids_duration,
            moderate_reduction: self.transmission.moderate_reduction,
            optimistic_reduction: self.transmission.optimistic_reduction,
        }
    }

    pub fn act_params(&self) -> ActParams {
        ActParams {
            steady_ap: self.partnerships.acts_steady_ap,
            steady_pi_window: self.partnerships.acts_pi_window,
            steady_pi_remainder: self.partnerships.acts_pi_remainder,
            pi_window_fraction: self.partnerships.pi_window_fraction,
        }
    }

    /// Canonical single-line JSON echo for output metadata.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// The six published scenarios rendered as a config-file block, ready to
/// paste into a JSON config.
pub fn presets_config_block() -> String {
    let block: BTreeMap<&str, BTreeMap<String, ScenarioDef>> = BTreeMap::from([(
        "scenarios",
        scenario::presets()
            .iter()
            .map(|s| (s.name.clone(), ScenarioDef::from_spec(s)))
            .collect(),
    )]);
    serde_json::to_string_pretty(&block).expect("presets serialize")
}
