//! Steady-partnership turnover and yearly act scheduling.
//!
//! Partnerships form only along current network edges, so a node's degree
//! bounds its yearly contacts and a partnered man has one fewer casual
//! contact (the steady edge consumes a unit of degree at rewiring time).
//! Acts are generated only for serodiscordant pairs: steady pairs draw
//! Poisson act counts, casual edges contribute exactly one act per year.

use serde::{Deserialize, Serialize};

use crate::disease::{Individual, Stage};
use crate::error::Result;
use crate::netgen::{EdgeSet, EdgeTag, NodeId};
use crate::stochastics::{sample_discrete_uniform, DistributionSpec, RngStream};
use crate::transmission::StageWindow;

/// Where an unpartnered man looks for a steady partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartnerPool {
    /// Current network neighbors (the default; keeps degree an upper bound
    /// on yearly contacts).
    Neighbors,
    /// Any connected (degree >= 1) unpartnered man in the population.
    Population,
}

/// Acts scheduled for one serodiscordant pair at one pricing level. A pair
/// whose source is in his first infection year produces two entries: the
/// PI-window acts and the remainder-of-year acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActScheduleEntry {
    pub source: NodeId,
    pub susceptible: NodeId,
    /// Acts receptive for the susceptible (URAI).
    pub receptive_acts: u32,
    /// Acts insertive for the susceptible (UIAI).
    pub insertive_acts: u32,
    pub window: StageWindow,
    pub tag: EdgeTag,
}

#[derive(Debug, Clone, Default)]
pub struct ActSchedule {
    pub entries: Vec<ActScheduleEntry>,
}

/// Act-frequency parameters, resolved from configuration.
#[derive(Debug, Clone)]
pub struct ActParams {
    /// Steady-pair acts per year with the source at AP.
    pub steady_ap: DistributionSpec,
    /// Steady-pair acts in the three-month PI window of the infection year.
    pub steady_pi_window: DistributionSpec,
    /// Steady-pair acts in the remaining nine months of the infection year.
    pub steady_pi_remainder: DistributionSpec,
    /// Fraction of the infection year covered by the PI window; a casual
    /// act in that year falls inside the window with this probability.
    pub pi_window_fraction: f64,
}

/// One yearly partnership pass: ages and dissolves existing partnerships,
/// then lets each unpartnered individual, visited in random order, form a
/// partnership with probability `p_form` with a uniformly chosen unpartnered
/// network neighbor. New partnerships draw their duration from `duration`
/// (at least one year). Returns the resulting steady pairs, canonical and
/// sorted.
pub fn form_and_dissolve_steady(
    individuals: &mut [Individual],
    adjacency: &[Vec<NodeId>],
    p_form: f64,
    duration: &DistributionSpec,
    scope: &RngStream,
) -> Result<Vec<(NodeId, NodeId)>> {
    form_and_dissolve_steady_in_pool(
        individuals,
        adjacency,
        p_form,
        duration,
        PartnerPool::Neighbors,
        scope,
    )
}

/// [`form_and_dissolve_steady`] with an explicit partner pool.
pub fn form_and_dissolve_steady_in_pool(
    individuals: &mut [Individual],
    adjacency: &[Vec<NodeId>],
    p_form: f64,
    duration: &DistributionSpec,
    pool: PartnerPool,
    scope: &RngStream,
) -> Result<Vec<(NodeId, NodeId)>> {
    let n = individuals.len();

    for id in 0..n {
        let Some(partner) = individuals[id].steady_partner else {
            continue;
        };
        if (partner as usize) < id {
            continue; // handled from the lower-id side
        }
        let left = individuals[id].steady_years_left.saturating_sub(1);
        if left == 0 {
            individuals[id].steady_partner = None;
            individuals[id].steady_years_left = 0;
            individuals[partner as usize].steady_partner = None;
            individuals[partner as usize].steady_years_left = 0;
        } else {
            individuals[id].steady_years_left = left;
            individuals[partner as usize].steady_years_left = left;
        }
    }

    let mut order: Vec<NodeId> = (0..n as NodeId)
        .filter(|&id| individuals[id as usize].steady_partner.is_none())
        .collect();
    let mut order_rng = scope.fork(&[0]);
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut order_rng);

    for &u in &order {
        if individuals[u as usize].steady_partner.is_some() {
            continue; // partnered earlier in this pass
        }
        let mut node_rng = scope.fork(&[1, u as u64]);
        if rand::Rng::random::<f64>(&mut node_rng) >= p_form {
            continue;
        }
        if adjacency[u as usize].is_empty() {
            continue; // men without any contact never partner
        }
        let candidates: Vec<NodeId> = match pool {
            PartnerPool::Neighbors => adjacency[u as usize]
                .iter()
                .copied()
                .filter(|&v| individuals[v as usize].steady_partner.is_none())
                .collect(),
            PartnerPool::Population => (0..n as NodeId)
                .filter(|&v| {
                    v != u
                        && !adjacency[v as usize].is_empty()
                        && individuals[v as usize].steady_partner.is_none()
                })
                .collect(),
        };
        if candidates.is_empty() {
            continue;
        }
        let pick = sample_discrete_uniform(0, candidates.len() as i64 - 1, &mut node_rng)?;
        let v = candidates[pick as usize];
        let years = duration.sample_count(&mut node_rng)?.max(1) as u32;
        individuals[u as usize].steady_partner = Some(v);
        individuals[u as usize].steady_years_left = years;
        individuals[v as usize].steady_partner = Some(u);
        individuals[v as usize].steady_years_left = years;
    }

    Ok(current_pairs(individuals))
}

/// The steady-partner matching as canonical `(low, high)` pairs in id order.
pub fn current_pairs(individuals: &[Individual]) -> Vec<(NodeId, NodeId)> {
    individuals
        .iter()
        .enumerate()
        .filter_map(|(id, ind)| {
            ind.steady_partner
                .filter(|&p| (id as NodeId) < p)
                .map(|p| (id as NodeId, p))
        })
        .collect()
}

/// Build the year's act schedule from the realized edges.
///
/// Only serodiscordant pairs (one transmitting infected, one susceptible)
/// generate entries; concordant pairs and pairs with an AIDS-stage member
/// are skipped. A source at stage PI is in his first infection year: steady
/// pairs split the year into PI-window and remainder acts, a casual act
/// falls in the PI window with probability `pi_window_fraction`. Each act is
/// receptive for the susceptible with probability one half.
pub fn schedule_acts(
    individuals: &[Individual],
    edges: &EdgeSet,
    params: &ActParams,
    scope: &RngStream,
) -> Result<ActSchedule> {
    schedule_acts_with_aids(individuals, edges, params, false, scope)
}

/// [`schedule_acts`] with AIDS-stage men optionally kept sexually active
/// (they then transmit at AP-level pricing).
pub fn schedule_acts_with_aids(
    individuals: &[Individual],
    edges: &EdgeSet,
    params: &ActParams,
    aids_active: bool,
    scope: &RngStream,
) -> Result<ActSchedule> {
    let transmits =
        |ind: &Individual| ind.is_transmitting() || (aids_active && ind.stage == Stage::Aids);
    let mut schedule = ActSchedule::default();
    for edge in edges.iter() {
        let (x, y) = (edge.a, edge.b);
        let (source, susceptible) = if transmits(&individuals[x as usize])
            && individuals[y as usize].stage == Stage::Negative
        {
            (x, y)
        } else if transmits(&individuals[y as usize])
            && individuals[x as usize].stage == Stage::Negative
        {
            (y, x)
        } else {
            continue;
        };
        let mut pair_rng = scope.fork(&[edge.a as u64, edge.b as u64]);
        let first_infection_year = individuals[source as usize].stage == Stage::Primary;

        match edge.tag {
            EdgeTag::Steady => {
                if first_infection_year {
                    let n_window = params.steady_pi_window.sample_count(&mut pair_rng)? as u32;
                    let n_rest = params.steady_pi_remainder.sample_count(&mut pair_rng)? as u32;
                    push_entry(
                        &mut schedule,
                        source,
                        susceptible,
                        n_window,
                        StageWindow::PiWindow,
                        edge.tag,
                        &mut pair_rng,
                    );
                    push_entry(
                        &mut schedule,
                        source,
                        susceptible,
                        n_rest,
                        StageWindow::ApLevel,
                        edge.tag,
                        &mut pair_rng,
                    );
                } else {
                    let n = params.steady_ap.sample_count(&mut pair_rng)? as u32;
                    push_entry(
                        &mut schedule,
                        source,
                        susceptible,
                        n,
                        StageWindow::ApLevel,
                        edge.tag,
                        &mut pair_rng,
                    );
                }
            }
            EdgeTag::Casual => {
                let window = if first_infection_year
                    && rand::Rng::random::<f64>(&mut pair_rng) < params.pi_window_fraction
                {
                    StageWindow::PiWindow
                } else {
                    StageWindow::ApLevel
                };
                push_entry(
                    &mut schedule,
                    source,
                    susceptible,
                    1,
                    window,
                    edge.tag,
                    &mut pair_rng,
                );
            }
        }
    }
    Ok(schedule)
}

fn push_entry(
    schedule: &mut ActSchedule,
    source: NodeId,
    susceptible: NodeId,
    acts: u32,
    window: StageWindow,
    tag: EdgeTag,
    rng: &mut RngStream,
) {
    let mut receptive = 0;
    for _ in 0..acts {
        if rand::Rng::random::<f64>(rng) < 0.5 {
            receptive += 1;
        }
    }
    schedule.entries.push(ActScheduleEntry {
        source,
        susceptible,
        receptive_acts: receptive,
        insertive_acts: acts - receptive,
        window,
        tag,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disease::infect;
    use crate::netgen::DegreeSequence;

    fn duration() -> DistributionSpec {
        DistributionSpec::DiscreteUniform { lo: 1, hi: 2 }
    }

    fn act_params() -> ActParams {
        ActParams {
            steady_ap: DistributionSpec::Poisson { lambda: 30.0 },
            steady_pi_window: DistributionSpec::Poisson { lambda: 8.0 },
            steady_pi_remainder: DistributionSpec::Poisson { lambda: 22.0 },
            pi_window_fraction: 0.25,
        }
    }

    fn ring_population(n: usize) -> (Vec<Individual>, Vec<Vec<NodeId>>) {
        let individuals: Vec<Individual> = (0..n as NodeId).map(Individual::susceptible).collect();
        let adjacency: Vec<Vec<NodeId>> = (0..n)
            .map(|i| vec![((i + n - 1) % n) as NodeId, ((i + 1) % n) as NodeId])
            .collect();
        (individuals, adjacency)
    }

    #[test]
    fn zero_formation_probability_means_no_partnerships() {
        let (mut pop, adj) = ring_population(50);
        for year in 0..20u64 {
            let scope = RngStream::new(5, 0).fork(&[year]);
            let pairs = form_and_dissolve_steady(&mut pop, &adj, 0.0, &duration(), &scope).unwrap();
            assert!(pairs.is_empty());
        }
        assert!(pop.iter().all(|i| i.steady_partner.is_none()));
    }

    #[test]
    fn isolated_node_never_partners() {
        let (mut pop, mut adj) = ring_population(10);
        adj[3] = Vec::new();
        adj[2].retain(|&v| v != 3);
        adj[4].retain(|&v| v != 3);
        for year in 0..50u64 {
            let scope = RngStream::new(6, 0).fork(&[year]);
            form_and_dissolve_steady(&mut pop, &adj, 1.0, &duration(), &scope).unwrap();
            assert!(pop[3].steady_partner.is_none());
        }
    }

    #[test]
    fn partnership_relation_stays_a_matching() {
        let (mut pop, adj) = ring_population(101);
        for year in 0..100u64 {
            let scope = RngStream::new(7, 0).fork(&[year]);
            let pairs = form_and_dissolve_steady(&mut pop, &adj, 0.7, &duration(), &scope).unwrap();
            for (id, ind) in pop.iter().enumerate() {
                if let Some(p) = ind.steady_partner {
                    assert_eq!(pop[p as usize].steady_partner, Some(id as NodeId));
                    assert_eq!(pop[p as usize].steady_years_left, ind.steady_years_left);
                }
            }
            let mut seen = std::collections::HashSet::new();
            for &(a, b) in &pairs {
                assert!(seen.insert(a) && seen.insert(b));
            }
        }
    }

    #[test]
    fn realized_partnership_duration_averages_one_and_a_half_years() {
        // Complete graph with a modest formation rate: an expired pair
        // re-forming in the same pass (which would merge two spans into
        // one observation) is then a ~1-in-1000 event.
        let n = 300;
        let mut pop: Vec<Individual> = (0..n as NodeId).map(Individual::susceptible).collect();
        let adj: Vec<Vec<NodeId>> = (0..n as NodeId)
            .map(|i| (0..n as NodeId).filter(|&j| j != i).collect())
            .collect();

        let mut active: std::collections::HashMap<(NodeId, NodeId), u32> =
            std::collections::HashMap::new();
        let mut completed: Vec<u32> = Vec::new();
        let root = RngStream::new(9, 0);
        let mut year = 0u64;
        while completed.len() < 10_000 {
            let scope = root.fork(&[year]);
            let pairs = form_and_dissolve_steady(&mut pop, &adj, 0.3, &duration(), &scope).unwrap();
            let current: std::collections::HashSet<(NodeId, NodeId)> =
                pairs.iter().copied().collect();
            active.retain(|pair, years| {
                if current.contains(pair) {
                    true
                } else {
                    completed.push(*years);
                    false
                }
            });
            for &pair in &current {
                *active.entry(pair).or_insert(0) += 1;
            }
            year += 1;
        }
        let mean = completed.iter().map(|&y| y as f64).sum::<f64>() / completed.len() as f64;
        assert!((mean - 1.5).abs() < 0.05, "mean duration {mean}");
    }

    #[test]
    fn concordant_pairs_generate_no_acts() {
        let (mut pop, _) = ring_population(4);
        // 0-1 both negative, 2-3 both infected.
        infect(&mut pop[2]).unwrap();
        infect(&mut pop[3]).unwrap();
        let seq = DegreeSequence::new(vec![1, 1, 1, 1]);
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![
            crate::netgen::Edge {
                a: 0,
                b: 1,
                tag: EdgeTag::Casual,
            },
            crate::netgen::Edge {
                a: 2,
                b: 3,
                tag: EdgeTag::Steady,
            },
        ]);
        assert!(crate::netgen::validate_network(&edges, &seq).passed());
        let scope = RngStream::new(10, 0);
        let schedule = schedule_acts(&pop, &edges, &act_params(), &scope).unwrap();
        assert!(schedule.entries.is_empty());
    }

    #[test]
    fn aids_stage_source_takes_no_acts() {
        let (mut pop, _) = ring_population(2);
        pop[0].stage = Stage::Aids;
        pop[0].aids_duration = Some(2);
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![crate::netgen::Edge {
            a: 0,
            b: 1,
            tag: EdgeTag::Steady,
        }]);
        let scope = RngStream::new(11, 0);
        let schedule = schedule_acts(&pop, &edges, &act_params(), &scope).unwrap();
        assert!(schedule.entries.is_empty());
    }

    #[test]
    fn steady_ap_pair_draws_thirty_acts_on_average() {
        let (mut pop, _) = ring_population(2);
        pop[0].stage = Stage::Asymptomatic;
        pop[0].ap_duration = Some(10);
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![crate::netgen::Edge {
            a: 0,
            b: 1,
            tag: EdgeTag::Steady,
        }]);
        let root = RngStream::new(12, 0);
        let mut total = 0u64;
        let mut receptive = 0u64;
        let n = 10_000u64;
        for year in 0..n {
            let scope = root.fork(&[year]);
            let schedule = schedule_acts(&pop, &edges, &act_params(), &scope).unwrap();
            assert_eq!(schedule.entries.len(), 1);
            let e = schedule.entries[0];
            assert_eq!(e.window, StageWindow::ApLevel);
            assert_eq!((e.source, e.susceptible), (0, 1));
            total += (e.receptive_acts + e.insertive_acts) as u64;
            receptive += e.receptive_acts as u64;
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 30.0).abs() < 0.2, "mean acts {mean}");
        let receptive_share = receptive as f64 / total as f64;
        assert!(
            (receptive_share - 0.5).abs() < 0.01,
            "share {receptive_share}"
        );
    }

    #[test]
    fn first_infection_year_steady_pair_splits_the_year() {
        let (mut pop, _) = ring_population(2);
        infect(&mut pop[1]).unwrap();
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![crate::netgen::Edge {
            a: 0,
            b: 1,
            tag: EdgeTag::Steady,
        }]);
        let root = RngStream::new(13, 0);
        let (mut window_sum, mut rest_sum) = (0u64, 0u64);
        let n = 10_000u64;
        for year in 0..n {
            let scope = root.fork(&[year]);
            let schedule = schedule_acts(&pop, &edges, &act_params(), &scope).unwrap();
            assert_eq!(schedule.entries.len(), 2);
            assert_eq!(schedule.entries[0].window, StageWindow::PiWindow);
            assert_eq!(schedule.entries[1].window, StageWindow::ApLevel);
            assert_eq!(schedule.entries[0].source, 1);
            window_sum +=
                (schedule.entries[0].receptive_acts + schedule.entries[0].insertive_acts) as u64;
            rest_sum +=
                (schedule.entries[1].receptive_acts + schedule.entries[1].insertive_acts) as u64;
        }
        let window_mean = window_sum as f64 / n as f64;
        let rest_mean = rest_sum as f64 / n as f64;
        assert!((window_mean - 8.0).abs() < 0.1, "window mean {window_mean}");
        assert!((rest_mean - 22.0).abs() < 0.2, "remainder mean {rest_mean}");
    }

    #[test]
    fn casual_serodiscordant_edge_contributes_exactly_one_act() {
        let (mut pop, _) = ring_population(2);
        pop[0].stage = Stage::Asymptomatic;
        pop[0].ap_duration = Some(10);
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![crate::netgen::Edge {
            a: 0,
            b: 1,
            tag: EdgeTag::Casual,
        }]);
        let root = RngStream::new(14, 0);
        for year in 0..1000u64 {
            let schedule = schedule_acts(&pop, &edges, &act_params(), &root.fork(&[year])).unwrap();
            assert_eq!(schedule.entries.len(), 1);
            let e = schedule.entries[0];
            assert_eq!(e.receptive_acts + e.insertive_acts, 1);
            assert_eq!(e.window, StageWindow::ApLevel);
        }
    }

    #[test]
    fn casual_act_in_first_infection_year_lands_in_pi_window_a_quarter_of_the_time() {
        let (mut pop, _) = ring_population(2);
        infect(&mut pop[0]).unwrap();
        let edges = crate::netgen::EdgeSet::from_edges_unchecked(vec![crate::netgen::Edge {
            a: 0,
            b: 1,
            tag: EdgeTag::Casual,
        }]);
        let root = RngStream::new(15, 0);
        let n = 20_000u64;
        let mut in_window = 0u64;
        for year in 0..n {
            let schedule = schedule_acts(&pop, &edges, &act_params(), &root.fork(&[year])).unwrap();
            if schedule.entries[0].window == StageWindow::PiWindow {
                in_window += 1;
            }
        }
        let frac = in_window as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.01, "window fraction {frac}");
    }
}
