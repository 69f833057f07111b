//! Yearly simulation loop, scenario execution, and multi-realization
//! orchestration.
//!
//! Within a year the order of operations is fixed: rewire the casual
//! network, age and form steady partnerships, schedule acts against the
//! start-of-year infection census, run per-pair infection trials, apply new
//! infections, run diagnosis and treatment, advance disease stages
//! (excluding this year's infections, whose PI year is next year), then
//! replace the dead. Randomness is consumed through event-keyed stream
//! forks, so two scenarios sharing a master seed agree draw-for-draw on
//! every pair and individual until their parameters actually diverge.

use rayon::prelude::*;

use crate::analysis::{self, AveragedYear, StageCensus, YearMetrics};
use crate::config::{SeedingMode, SimulationConfig};
use crate::disease::{self, Individual, Stage};
use crate::error::{Error, Result};
use crate::netgen::{
    annual_rewire, generate_degree_sequence, wire_configuration_model, DegreeSequence, EdgeSet,
    NodeId,
};
use crate::partnerships::{self, ActSchedule};
use crate::scenario::ScenarioSpec;
use crate::stochastics::{sample_discrete_uniform, PowerLawDegree, RngStream, RNG_ALGORITHM};
use crate::transmission::{agreement_factor, per_act_probability, per_year_probability, ActType};

/// Fork-path purpose tags. Every logical event scope gets its own child
/// stream keyed by these constants, the calendar year, and entity ids.
mod scope {
    pub const DEGREES: u64 = 1;
    pub const WIRE: u64 = 2;
    pub const SEEDING: u64 = 3;
    pub const PARTNER: u64 = 4;
    pub const ACTS: u64 = 5;
    pub const TRIALS: u64 = 6;
    pub const DIAG: u64 = 7;
    pub const PROGRESS: u64 = 8;
}

/// Stream id used for the degree sequence when realizations share a network.
const SHARED_NETWORK_STREAM: u64 = u64::MAX;

/// Stream-id stride between retry attempts of a failed realization.
const RETRY_STRIDE: u64 = 1 << 32;

fn year_key(year: i32) -> u64 {
    year as i64 as u64
}

/// One realization's mutable world.
#[derive(Debug, Clone)]
pub struct State {
    pub year: i32,
    pub degrees: DegreeSequence,
    pub edges: EdgeSet,
    pub individuals: Vec<Individual>,
    pub cumulative_infections: u64,
}

impl State {
    pub fn census(&self) -> StageCensus {
        let mut census = StageCensus::default();
        for ind in &self.individuals {
            match ind.stage {
                Stage::Negative => census.negative += 1,
                Stage::Primary => census.primary += 1,
                Stage::Asymptomatic => census.asymptomatic += 1,
                Stage::Aids => census.aids += 1,
            }
        }
        census
    }

    fn diagnosed_fraction(&self) -> f64 {
        let infected = self.individuals.iter().filter(|i| i.is_infected()).count();
        if infected == 0 {
            return 0.0;
        }
        let diagnosed = self
            .individuals
            .iter()
            .filter(|i| i.is_infected() && i.diagnosed)
            .count();
        diagnosed as f64 / infected as f64
    }
}

/// Build the initial world: the 1984-state network, the seeded positives
/// (placed in AP with uniformly elapsed stage years and a configurable
/// initially-diagnosed share), and one pre-seeding partnership pass.
pub fn initialize(config: &SimulationConfig, master_seed: u64, stream_id: u64) -> Result<State> {
    let root = RngStream::new(master_seed, stream_id);
    let n = config.population.size as usize;
    let table = PowerLawDegree::new(
        config.network.gamma,
        config.network.k_max,
        config.network.p_zero,
    )?;

    // A drawn sequence can fail to wire into a simple graph (hub-heavy
    // draws at small n); resample the sequence and re-wire, up to a budget.
    // In shared-network mode the sequence is selected on a stream common to
    // all realizations, so every realization gets the same degrees.
    const ATTEMPTS: u64 = 30;
    let init_year = config.simulation.start_year - 1;
    let shared_degrees = if config.network.shared_network {
        let shared_root = RngStream::new(master_seed, SHARED_NETWORK_STREAM);
        let mut found = None;
        for attempt in 0..ATTEMPTS {
            let seq = generate_degree_sequence(
                n,
                &table,
                &mut shared_root.fork(&[scope::DEGREES, attempt]),
            )?;
            if wire_configuration_model(&seq, &mut shared_root.fork(&[scope::WIRE, attempt]))
                .is_ok()
            {
                found = Some(seq);
                break;
            }
        }
        match found {
            Some(seq) => Some(seq),
            None => {
                return Err(Error::Generation(format!(
                    "no wirable shared degree sequence found in {ATTEMPTS} attempts \
                     (n = {n}, k_max = {})",
                    config.network.k_max
                )))
            }
        }
    } else {
        None
    };
    let mut wired = None;
    let mut last_err = None;
    for attempt in 0..ATTEMPTS {
        let degrees = match &shared_degrees {
            Some(seq) => seq.clone(),
            None => {
                generate_degree_sequence(n, &table, &mut root.fork(&[scope::DEGREES, attempt]))?
            }
        };
        match wire_configuration_model(
            &degrees,
            &mut root.fork(&[scope::WIRE, year_key(init_year), attempt]),
        ) {
            Ok(edges) => {
                wired = Some((degrees, edges));
                break;
            }
            Err(err) => last_err = Some(err),
        }
    }
    let Some((degrees, edges)) = wired else {
        return Err(Error::Generation(format!(
            "no wirable degree sequence found in {ATTEMPTS} attempts (n = {n}, k_max = {}): {}",
            config.network.k_max,
            last_err.map(|e| e.to_string()).unwrap_or_default()
        )));
    };

    let mut individuals: Vec<Individual> = (0..n as NodeId).map(Individual::susceptible).collect();

    let mut seeding = root.fork(&[scope::SEEDING]);
    let chosen = match config.population.seeding {
        SeedingMode::DegreeUniform => {
            let mut ids: Vec<NodeId> = (0..n as NodeId).collect();
            rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut seeding);
            ids.truncate(config.population.initial_infected as usize);
            ids
        }
        SeedingMode::DegreeWeighted => {
            let mut stubs: Vec<NodeId> = Vec::new();
            for (node, &d) in degrees.degrees().iter().enumerate() {
                for _ in 0..d {
                    stubs.push(node as NodeId);
                }
            }
            let eligible = degrees.degrees().iter().filter(|&&d| d > 0).count();
            if eligible < config.population.initial_infected as usize {
                return Err(Error::Generation(format!(
                    "degree-weighted seeding needs {} connected nodes, found {eligible}",
                    config.population.initial_infected
                )));
            }
            let mut picked = vec![false; n];
            let mut chosen = Vec::new();
            while chosen.len() < config.population.initial_infected as usize {
                let idx = sample_discrete_uniform(0, stubs.len() as i64 - 1, &mut seeding)?;
                let node = stubs[idx as usize];
                if !picked[node as usize] {
                    picked[node as usize] = true;
                    chosen.push(node);
                }
            }
            chosen
        }
    };

    let params = config.disease_params();
    for id in chosen {
        let ind = &mut individuals[id as usize];
        ind.stage = Stage::Asymptomatic;
        let duration = params.ap_untreated.sample_count(&mut seeding)?.max(1) as u32;
        ind.ap_duration = Some(duration);
        ind.years_in_stage = sample_discrete_uniform(0, duration as i64 - 1, &mut seeding)? as u32;
        ind.diagnosed =
            rand::Rng::random::<f64>(&mut seeding) < config.population.initial_diagnosed_fraction;
    }

    let adjacency = edges.adjacency(n);
    let mut edges = edges;
    let pairs = partnerships::form_and_dissolve_steady_in_pool(
        &mut individuals,
        &adjacency,
        config.partnerships.p_form,
        &config.partnerships.duration,
        config.partnerships.partner_pool,
        &root.fork(&[scope::PARTNER, year_key(init_year)]),
    )?;
    edges.retag_steady(&pairs);

    Ok(State {
        year: init_year,
        degrees,
        edges,
        individuals,
        cumulative_infections: 0,
    })
}

/// Advance the world by one calendar year and report that year's metrics.
pub fn step_year(
    state: &mut State,
    scenario: &ScenarioSpec,
    config: &SimulationConfig,
    year: i32,
    root: &RngStream,
) -> Result<YearMetrics> {
    let n = state.individuals.len();
    let (risk, therapy_mode) = scenario.factors(year);
    let disease_params = config.disease_params();
    let act_params = config.act_params();

    // 1. Rewire casual contacts around the surviving steady pairs.
    let pairs = partnerships::current_pairs(&state.individuals);
    state.edges = annual_rewire(
        &state.edges,
        &state.degrees,
        &pairs,
        &mut root.fork(&[scope::WIRE, year_key(year)]),
    );

    // 2. Partnership turnover, then re-tag the realized edges.
    let adjacency = state.edges.adjacency(n);
    let pairs = partnerships::form_and_dissolve_steady_in_pool(
        &mut state.individuals,
        &adjacency,
        config.partnerships.p_form,
        &config.partnerships.duration,
        config.partnerships.partner_pool,
        &root.fork(&[scope::PARTNER, year_key(year)]),
    )?;
    state.edges.retag_steady(&pairs);

    // 3. Start-of-year susceptible census.
    let negative_at_start = state
        .individuals
        .iter()
        .filter(|i| i.stage == Stage::Negative)
        .count() as u32;

    // 4-5. Acts against the start-of-year infection census, then trials.
    let schedule = partnerships::schedule_acts_with_aids(
        &state.individuals,
        &state.edges,
        &act_params,
        config.disease.aids_sexually_active,
        &root.fork(&[scope::ACTS, year_key(year)]),
    )?;
    let mut newly_infected = run_infection_trials(state, config, &schedule, risk, year, root, 0)?;

    if config.partnerships.within_year_chains {
        let mut round = 1u64;
        let mut frontier = newly_infected.clone();
        while !frontier.is_empty() {
            for &id in &frontier {
                disease::infect(&mut state.individuals[id as usize])?;
            }
            let sub_edges = EdgeSet::from_edges_unchecked(
                state
                    .edges
                    .iter()
                    .filter(|e| {
                        let a_new = frontier.contains(&e.a);
                        let b_new = frontier.contains(&e.b);
                        (a_new && state.individuals[e.b as usize].stage == Stage::Negative)
                            || (b_new && state.individuals[e.a as usize].stage == Stage::Negative)
                    })
                    .copied()
                    .collect(),
            );
            let sub_schedule = partnerships::schedule_acts_with_aids(
                &state.individuals,
                &sub_edges,
                &act_params,
                config.disease.aids_sexually_active,
                &root.fork(&[scope::ACTS, year_key(year), round]),
            )?;
            frontier = run_infection_trials(state, config, &sub_schedule, risk, year, root, round)?;
            newly_infected.extend(frontier.iter().copied());
            round += 1;
        }
        // Chained infections are already applied; `newly_infected` still
        // marks the whole cohort for the progression skip below.
    } else {
        for &id in &newly_infected {
            disease::infect(&mut state.individuals[id as usize])?;
        }
    }
    let new_infections = newly_infected.len() as u32;
    state.cumulative_infections += new_infections as u64;

    // 6. Diagnosis and treatment for every infected individual.
    let treatment_available = year >= config.disease.treatment_start_year;
    for id in 0..n {
        if state.individuals[id].is_infected() {
            let mut rng = root.fork(&[scope::DIAG, year_key(year), id as u64]);
            disease::diagnose_and_treat_step(
                &mut state.individuals[id],
                &disease_params,
                therapy_mode,
                treatment_available,
                &mut rng,
            )?;
        }
    }

    // 7. Stage progression; this year's infections start progressing next
    // year, so their PI window falls in their first full infectious year.
    let mut fresh = vec![false; n];
    for &id in &newly_infected {
        fresh[id as usize] = true;
    }
    for (id, &infected_this_year) in fresh.iter().enumerate() {
        if !infected_this_year && state.individuals[id].is_infected() {
            let mut rng = root.fork(&[scope::PROGRESS, year_key(year), id as u64]);
            disease::advance_year(&mut state.individuals[id], &disease_params, &mut rng)?;
        }
    }

    // 8. Replace the dead with fresh susceptibles on the same nodes.
    for id in 0..n {
        if state.individuals[id].dead {
            let partner = disease::replace_dead(&mut state.individuals[id])?;
            if let Some(p) = partner {
                state.individuals[p as usize].steady_partner = None;
                state.individuals[p as usize].steady_years_left = 0;
            }
        }
    }

    state.year = year;
    let susceptible_py = analysis::susceptible_person_years(negative_at_start, new_infections);
    let incidence = analysis::incidence(new_infections, susceptible_py)?;
    Ok(YearMetrics {
        year,
        new_infections,
        susceptible_person_years: susceptible_py,
        incidence_per_100py: incidence,
        diagnosed_fraction: state.diagnosed_fraction(),
        census: state.census(),
    })
}

/// Evaluate one Bernoulli trial per serodiscordant pair, composing the
/// pair's scheduled acts into a yearly probability. Returns the infected
/// susceptibles (deduplicated, in ascending id order).
fn run_infection_trials(
    state: &State,
    config: &SimulationConfig,
    schedule: &ActSchedule,
    risk: f64,
    year: i32,
    root: &RngStream,
    round: u64,
) -> Result<Vec<NodeId>> {
    let base = &config.transmission.base;
    let susceptibility = config.transmission.susceptibility;
    let mut infected = Vec::new();
    let mut seen = vec![false; state.individuals.len()];

    let mut idx = 0;
    while idx < schedule.entries.len() {
        let first = schedule.entries[idx];
        let (source, susceptible) = (first.source, first.susceptible);
        let mut acts: Vec<f64> = Vec::new();
        while idx < schedule.entries.len() {
            let entry = schedule.entries[idx];
            if (entry.source, entry.susceptible) != (source, susceptible) {
                break;
            }
            let reduction = state.individuals[source as usize].infectivity_reduction;
            let agreement = agreement_factor(
                entry.tag,
                state.individuals[source as usize].steady_partner.is_some(),
                state.individuals[susceptible as usize]
                    .steady_partner
                    .is_some(),
                config.transmission.agreement_factor,
            );
            for (act_type, count) in [
                (ActType::Receptive, entry.receptive_acts),
                (ActType::Insertive, entry.insertive_acts),
            ] {
                let p = per_act_probability(
                    base.probability(entry.window, act_type) * susceptibility,
                    reduction,
                    risk,
                    agreement,
                );
                for _ in 0..count {
                    acts.push(p);
                }
            }
            idx += 1;
        }
        let p_year = per_year_probability(&acts);
        let (lo, hi) = if source < susceptible {
            (source, susceptible)
        } else {
            (susceptible, source)
        };
        let mut trial_path = vec![scope::TRIALS, year_key(year), lo as u64, hi as u64];
        if round > 0 {
            trial_path.push(round);
        }
        let mut trial_rng = root.fork(&trial_path);
        if rand::Rng::random::<f64>(&mut trial_rng) < p_year && !seen[susceptible as usize] {
            seen[susceptible as usize] = true;
            infected.push(susceptible);
        }
    }
    infected.sort_unstable();
    Ok(infected)
}

/// Per-realization yearly series.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSeries {
    pub realization: u32,
    pub stream_id: u64,
    pub years: Vec<YearMetrics>,
}

/// Per-scenario result: every realization plus the averaged series and the
/// metadata needed to reproduce the run byte-for-byte.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub scenario: ScenarioSpec,
    pub master_seed: u64,
    pub rng_algorithm: &'static str,
    /// Effective configuration (scenario overrides applied), as JSON.
    pub config_echo: String,
    pub realizations: Vec<RealizationSeries>,
    pub averaged: Vec<AveragedYear>,
}

impl SimulationResult {
    pub fn averaged_year(&self, year: i32) -> Option<&AveragedYear> {
        self.averaged.iter().find(|y| y.year == year)
    }

    pub fn scenario_json(&self) -> String {
        serde_json::to_string(&self.scenario).expect("scenario serializes")
    }
}

/// Run one realization, invoking `observe` with the end-of-year state after
/// every step.
pub fn run_realization_observed(
    config: &SimulationConfig,
    scenario: &ScenarioSpec,
    master_seed: u64,
    stream_id: u64,
    observe: &mut dyn FnMut(i32, &State),
) -> Result<Vec<YearMetrics>> {
    let root = RngStream::new(master_seed, stream_id);
    let mut state = initialize(config, master_seed, stream_id)?;
    let mut years = Vec::with_capacity(
        (config.simulation.end_year - config.simulation.start_year + 1) as usize,
    );
    for year in config.simulation.start_year..=config.simulation.end_year {
        let metrics = step_year(&mut state, scenario, config, year, &root)?;
        observe(year, &state);
        years.push(metrics);
    }
    Ok(years)
}

pub fn run_realization(
    config: &SimulationConfig,
    scenario: &ScenarioSpec,
    master_seed: u64,
    stream_id: u64,
) -> Result<Vec<YearMetrics>> {
    run_realization_observed(config, scenario, master_seed, stream_id, &mut |_, _| {})
}

/// Run every realization of one scenario and average. Realizations execute
/// concurrently on independent streams; assembly is ordered by realization
/// index, so parallelism never changes the output.
pub fn run_scenario(
    scenario: &ScenarioSpec,
    config: &SimulationConfig,
    master_seed: u64,
) -> Result<SimulationResult> {
    let effective = config.with_overrides(&scenario.overrides);
    let realizations: Vec<Result<RealizationSeries>> = (0..effective.simulation.realizations)
        .into_par_iter()
        .map(|realization| {
            let mut last_err = None;
            for attempt in 0..4u64 {
                let stream_id = realization as u64 + attempt * RETRY_STRIDE;
                match run_realization(&effective, scenario, master_seed, stream_id) {
                    Ok(years) => {
                        return Ok(RealizationSeries {
                            realization,
                            stream_id,
                            years,
                        })
                    }
                    Err(err @ Error::Generation(_)) => last_err = Some(err),
                    Err(err) => return Err(err),
                }
            }
            Err(last_err.unwrap_or_else(|| {
                Error::Generation("realization failed with no diagnostic".into())
            }))
        })
        .collect();
    let realizations: Vec<RealizationSeries> =
        realizations.into_iter().collect::<Result<Vec<_>>>()?;
    let averaged = average_series(&realizations);
    Ok(SimulationResult {
        scenario: scenario.clone(),
        master_seed,
        rng_algorithm: RNG_ALGORITHM,
        config_echo: effective.canonical_json(),
        realizations,
        averaged,
    })
}

fn average_series(realizations: &[RealizationSeries]) -> Vec<AveragedYear> {
    let Some(first) = realizations.first() else {
        return Vec::new();
    };
    let r = realizations.len() as f64;
    first
        .years
        .iter()
        .enumerate()
        .map(|(i, y0)| {
            let at = |f: &dyn Fn(&YearMetrics) -> f64| -> Vec<f64> {
                realizations.iter().map(|s| f(&s.years[i])).collect()
            };
            let incidences = at(&|y| y.incidence_per_100py);
            let mean_incidence = incidences.iter().sum::<f64>() / r;
            let sd_incidence = if realizations.len() > 1 {
                (incidences
                    .iter()
                    .map(|x| (x - mean_incidence).powi(2))
                    .sum::<f64>()
                    / (r - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            let mean = |f: &dyn Fn(&YearMetrics) -> f64| at(f).iter().sum::<f64>() / r;
            AveragedYear {
                year: y0.year,
                mean_incidence,
                sd_incidence,
                mean_diagnosed_fraction: mean(&|y| y.diagnosed_fraction),
                mean_new_infections: mean(&|y| y.new_infections as f64),
                mean_negative: mean(&|y| y.census.negative as f64),
                mean_primary: mean(&|y| y.census.primary as f64),
                mean_asymptomatic: mean(&|y| y.census.asymptomatic as f64),
                mean_aids: mean(&|y| y.census.aids as f64),
            }
        })
        .collect()
}
