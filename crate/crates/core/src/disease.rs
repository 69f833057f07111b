//! Per-agent HIV natural history: staging, diagnosis, treatment, and
//! death-replacement.
//!
//! Infection progresses irreversibly Negative -> PI -> AP -> AIDS. A fresh
//! infection spends exactly one simulated year in PI (the highly infectious
//! window occupies the first three months of that year; the remainder
//! already transmits at AP level). The AP duration is drawn at entry:
//! B(26, 0.5) for the untreated or treatment-failed, B(52, 0.5) after a
//! successful treatment. Individuals whose AIDS duration has elapsed are
//! replaced by a fresh susceptible on the same network node, keeping the
//! population size constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::NodeId;
use crate::stochastics::{sample_continuous_uniform, DistributionSpec, RngStream};

/// Infection stage. `Primary` and `Asymptomatic` are the PI and AP stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Negative,
    Primary,
    Asymptomatic,
    Aids,
}

/// Treatment regimen strength in force when a treatment starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TherapyMode {
    Moderate,
    Optimistic,
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub id: NodeId,
    pub stage: Stage,
    pub years_in_stage: u32,
    /// Drawn when the individual enters AP; redrawn on successful treatment.
    pub ap_duration: Option<u32>,
    /// Drawn when the individual enters AIDS.
    pub aids_duration: Option<u32>,
    pub diagnosed: bool,
    pub treated: bool,
    pub treatment_successful: bool,
    /// Multiplier on per-act transmission probability; 1 unless successfully
    /// treated.
    pub infectivity_reduction: f64,
    pub steady_partner: Option<NodeId>,
    pub steady_years_left: u32,
    /// Set by [`advance_year`] when the AIDS duration has elapsed; cleared
    /// by [`replace_dead`].
    pub dead: bool,
}

impl Individual {
    pub fn susceptible(id: NodeId) -> Self {
        Individual {
            id,
            stage: Stage::Negative,
            years_in_stage: 0,
            ap_duration: None,
            aids_duration: None,
            diagnosed: false,
            treated: false,
            treatment_successful: false,
            infectivity_reduction: 1.0,
            steady_partner: None,
            steady_years_left: 0,
            dead: false,
        }
    }

    pub fn is_infected(&self) -> bool {
        self.stage != Stage::Negative
    }

    /// Whether the individual takes part in sexual acts as a transmission
    /// source. AIDS-stage individuals do not.
    pub fn is_transmitting(&self) -> bool {
        matches!(self.stage, Stage::Primary | Stage::Asymptomatic)
    }
}

/// Natural-history and treatment parameters, resolved from configuration.
#[derive(Debug, Clone)]
pub struct DiseaseParams {
    pub p_diag: f64,
    pub p_success: f64,
    pub ap_untreated: DistributionSpec,
    pub ap_treated: DistributionSpec,
    pub aids_duration: DistributionSpec,
    pub moderate_reduction: (f64, f64),
    pub optimistic_reduction: (f64, f64),
}

/// Seroconversion. The PI -> AP transition fires at the individual's next
/// yearly advance, so a new infection is PI at the start of exactly one
/// simulated year.
pub fn infect(ind: &mut Individual) -> Result<()> {
    if ind.stage != Stage::Negative {
        return Err(Error::Logic(format!(
            "cannot infect individual {} already at stage {:?}",
            ind.id, ind.stage
        )));
    }
    ind.stage = Stage::Primary;
    ind.years_in_stage = 0;
    Ok(())
}

/// One yearly progression step. Susceptibles are untouched. PI moves to AP,
/// drawing the stage duration according to treatment status. AP and AIDS
/// accumulate years and transition once the drawn duration has elapsed; an
/// elapsed AIDS duration raises the `dead` flag for the replacement pass.
pub fn advance_year(
    ind: &mut Individual,
    params: &DiseaseParams,
    rng: &mut RngStream,
) -> Result<()> {
    match ind.stage {
        Stage::Negative => {}
        Stage::Primary => {
            let dist = if ind.treatment_successful {
                &params.ap_treated
            } else {
                &params.ap_untreated
            };
            ind.stage = Stage::Asymptomatic;
            ind.years_in_stage = 0;
            ind.ap_duration = Some((dist.sample_count(rng)?.max(1)) as u32);
        }
        Stage::Asymptomatic => {
            ind.years_in_stage += 1;
            let duration = ind.ap_duration.ok_or_else(|| {
                Error::Logic(format!("individual {} in AP without a duration", ind.id))
            })?;
            if ind.years_in_stage >= duration {
                ind.stage = Stage::Aids;
                ind.years_in_stage = 0;
                ind.aids_duration = Some((params.aids_duration.sample_count(rng)?.max(1)) as u32);
            }
        }
        Stage::Aids => {
            ind.years_in_stage += 1;
            let duration = ind.aids_duration.ok_or_else(|| {
                Error::Logic(format!("individual {} in AIDS without a duration", ind.id))
            })?;
            if ind.years_in_stage >= duration {
                ind.dead = true;
            }
        }
    }
    Ok(())
}

/// Yearly diagnosis and treatment pass for one individual.
///
/// Undiagnosed infected individuals are diagnosed with probability
/// `p_diag`. When treatment is available, any diagnosed-but-untreated
/// individual starts therapy: with probability `p_success` the treatment
/// succeeds, drawing the infectivity-reduction factor from the mode's
/// uniform range and (for AP individuals) redrawing the stage duration from
/// the treated distribution, clamped so at least one AP year remains. A
/// failed treatment keeps the untreated duration and baseline infectivity.
pub fn diagnose_and_treat_step(
    ind: &mut Individual,
    params: &DiseaseParams,
    mode: TherapyMode,
    treatment_available: bool,
    rng: &mut RngStream,
) -> Result<()> {
    if !ind.is_infected() {
        return Ok(());
    }
    if !ind.diagnosed && rand::Rng::random::<f64>(rng) < params.p_diag {
        ind.diagnosed = true;
    }
    if ind.diagnosed && !ind.treated && treatment_available {
        ind.treated = true;
        if rand::Rng::random::<f64>(rng) < params.p_success {
            ind.treatment_successful = true;
            let (lo, hi) = match mode {
                TherapyMode::Moderate => params.moderate_reduction,
                TherapyMode::Optimistic => params.optimistic_reduction,
            };
            ind.infectivity_reduction = sample_continuous_uniform(lo, hi, rng)?;
            if ind.stage == Stage::Asymptomatic {
                let drawn = params.ap_treated.sample_count(rng)?.max(1) as u32;
                ind.ap_duration = Some(drawn.max(ind.years_in_stage + 1));
            }
        }
    }
    Ok(())
}

/// Replace a dead individual with a fresh susceptible on the same node.
/// Returns the former steady partner, if any, so the caller can dissolve
/// the partnership on the surviving side.
pub fn replace_dead(ind: &mut Individual) -> Result<Option<NodeId>> {
    if !ind.dead {
        return Err(Error::Logic(format!(
            "individual {} is alive and cannot be replaced",
            ind.id
        )));
    }
    let partner = ind.steady_partner;
    *ind = Individual::susceptible(ind.id);
    Ok(partner)
}
