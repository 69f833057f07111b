//! Scale-free contact network construction via the configuration model.
//!
//! Degrees are drawn once per realization from a truncated power law and
//! stay fixed; the realized edge set is rewired every simulated year so a
//! node keeps its number of contacts while the contacts themselves change.
//! Wiring uses stub matching with rejection repair: shuffle the stub list,
//! pair sequentially, and fix self-loops and duplicate pairs by random
//! double-edge swaps, reshuffling everything if the repair budget runs out.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::stochastics::{sample_discrete_uniform, PowerLawDegree, RngStream};

pub type NodeId = u32;

/// Relationship type carried by each realized edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    Casual,
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub tag: EdgeTag,
}

/// Fixed per-node contact counts for one realization.
#[derive(Debug, Clone)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Self {
        DegreeSequence { degrees }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degree(&self, node: NodeId) -> u32 {
        self.degrees[node as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn sum(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }
}

fn pack(a: NodeId, b: NodeId) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

/// A simple graph: no self-loops, no duplicate pairs. Edges are stored in
/// insertion order so that iteration (and hence every downstream draw) is
/// deterministic; the membership index is only ever queried, never iterated.
#[derive(Debug, Clone, Default)]
pub struct EdgeSet {
    edges: Vec<Edge>,
    membership: HashSet<u64>,
}

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet::default()
    }

    /// Build from raw edges without enforcing any invariant. Intended for
    /// feeding deliberately broken graphs to [`validate_network`].
    pub fn from_edges_unchecked(edges: Vec<Edge>) -> Self {
        let membership = edges.iter().map(|e| pack(e.a, e.b)).collect();
        EdgeSet { edges, membership }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        self.membership.contains(&pack(a, b))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    /// Insert a casual edge; returns false on a self-loop or duplicate.
    pub fn insert_casual(&mut self, a: NodeId, b: NodeId) -> bool {
        self.insert_tagged(a, b, EdgeTag::Casual)
    }

    fn insert_tagged(&mut self, a: NodeId, b: NodeId, tag: EdgeTag) -> bool {
        if a == b || !self.membership.insert(pack(a, b)) {
            return false;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.push(Edge { a, b, tag });
        true
    }

    fn remove_at(&mut self, index: usize) -> Edge {
        let edge = self.edges.swap_remove(index);
        self.membership.remove(&pack(edge.a, edge.b));
        edge
    }

    /// Re-tag every edge: Steady exactly for current partner pairs.
    pub fn retag_steady(&mut self, pairs: &[(NodeId, NodeId)]) {
        let steady: HashSet<u64> = pairs.iter().map(|&(a, b)| pack(a, b)).collect();
        for edge in &mut self.edges {
            edge.tag = if steady.contains(&pack(edge.a, edge.b)) {
                EdgeTag::Steady
            } else {
                EdgeTag::Casual
            };
        }
    }

    /// Neighbor lists in deterministic (edge-insertion) order.
    pub fn adjacency(&self, n: usize) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.a as usize].push(e.b);
            adj[e.b as usize].push(e.a);
        }
        adj
    }

    pub fn incident_counts(&self, n: usize) -> Vec<u32> {
        let mut counts = vec![0u32; n];
        for e in &self.edges {
            counts[e.a as usize] += 1;
            counts[e.b as usize] += 1;
        }
        counts
    }
}

/// Draw a length-`n` degree sequence i.i.d. from the truncated power law,
/// then repair parity: an odd sum is fixed by incrementing one uniformly
/// chosen node whose degree lies in `[1, k_max - 1]`. If no node qualifies
/// the whole sequence is resampled.
pub fn generate_degree_sequence(
    n: usize,
    table: &PowerLawDegree,
    rng: &mut RngStream,
) -> Result<DegreeSequence> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "population size must be >= 2, got {n}"
        )));
    }
    for _ in 0..1000 {
        let mut degrees: Vec<u32> = (0..n).map(|_| table.sample(rng)).collect();
        let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
        if sum % 2 == 1 {
            let candidates: Vec<usize> = degrees
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d >= 1 && d < table.k_max())
                .map(|(i, _)| i)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let pick = sample_discrete_uniform(0, candidates.len() as i64 - 1, rng)? as usize;
            degrees[candidates[pick]] += 1;
        }
        return Ok(DegreeSequence::new(degrees));
    }
    Err(Error::Generation(
        "could not repair degree-sum parity after 1000 resamples".into(),
    ))
}

/// Wire a degree sequence into a simple graph. All edges come out Casual.
pub fn wire_configuration_model(seq: &DegreeSequence, rng: &mut RngStream) -> Result<EdgeSet> {
    wire_with_forbidden(seq.degrees(), &[], rng)
}

/// Stub matching over `degrees`, additionally treating `forbidden` pairs as
/// already present (used when casual edges must not collide with steady
/// ones). The forbidden pairs are not emitted.
fn wire_with_forbidden(
    degrees: &[u32],
    forbidden: &[(NodeId, NodeId)],
    rng: &mut RngStream,
) -> Result<EdgeSet> {
    let sum: u64 = degrees.iter().map(|&d| d as u64).sum();
    if sum % 2 == 1 {
        return Err(Error::Parameter(
            "degree sum must be even before wiring".into(),
        ));
    }
    let mut stubs: Vec<NodeId> = Vec::with_capacity(sum as usize);
    for (node, &d) in degrees.iter().enumerate() {
        for _ in 0..d {
            stubs.push(node as NodeId);
        }
    }
    let repair_budget = 100 * degrees.len() as u64;

    const MAX_RESHUFFLES: u32 = 50;
    for _ in 0..MAX_RESHUFFLES {
        stubs.shuffle(rng);
        let mut edges = EdgeSet::new();
        for &(a, b) in forbidden {
            edges.membership.insert(pack(a, b));
        }
        let mut pending: Vec<(NodeId, NodeId)> = Vec::new();
        for pair in stubs.chunks_exact(2) {
            if !edges.insert_casual(pair[0], pair[1]) {
                pending.push((pair[0], pair[1]));
            }
        }
        let mut failures: u64 = 0;
        let mut repaired = true;
        'repair: while let Some((x, y)) = pending.pop() {
            loop {
                if failures >= repair_budget || edges.is_empty() {
                    repaired = false;
                    break 'repair;
                }
                let idx = sample_discrete_uniform(0, edges.len() as i64 - 1, rng)? as usize;
                let Edge { a: c, b: d, .. } = edges.edges[idx];
                // Random orientation of the double-edge swap.
                let (c, d) = if rand::Rng::random::<bool>(rng) {
                    (c, d)
                } else {
                    (d, c)
                };
                let legal = x != c
                    && y != d
                    && pack(x, c) != pack(y, d)
                    && !edges.contains(x, c)
                    && !edges.contains(y, d);
                if legal {
                    edges.remove_at(idx);
                    edges.insert_casual(x, c);
                    edges.insert_casual(y, d);
                    break;
                }
                failures += 1;
            }
        }
        if repaired {
            for &(a, b) in forbidden {
                edges.membership.remove(&pack(a, b));
            }
            return Ok(edges);
        }
    }
    Err(Error::Generation(format!(
        "stub matching failed after {MAX_RESHUFFLES} reshuffles"
    )))
}

/// Rebuild the year's casual edges from scratch on residual degrees (one
/// unit of degree per steady partner is reserved for the steady edge), then
/// attach every steady pair as a Steady-tagged edge.
///
/// If residual wiring stays infeasible after the retry budget, the previous
/// year's casual edges are kept (minus any that now coincide with a steady
/// pair) and a warning is logged.
pub fn annual_rewire(
    previous: &EdgeSet,
    seq: &DegreeSequence,
    steady_pairs: &[(NodeId, NodeId)],
    rng: &mut RngStream,
) -> EdgeSet {
    let mut residual: Vec<u32> = seq.degrees().to_vec();
    for &(a, b) in steady_pairs {
        residual[a as usize] = residual[a as usize].saturating_sub(1);
        residual[b as usize] = residual[b as usize].saturating_sub(1);
    }
    // Residual parity is guaranteed: each pair removes exactly two stubs.
    match wire_with_forbidden(&residual, steady_pairs, rng) {
        Ok(mut edges) => {
            for &(a, b) in steady_pairs {
                edges.insert_tagged(a, b, EdgeTag::Steady);
            }
            edges
        }
        Err(err) => {
            log::warn!("annual rewire failed ({err}); keeping previous casual edges");
            let mut edges = EdgeSet::new();
            for &(a, b) in steady_pairs {
                edges.insert_tagged(a, b, EdgeTag::Steady);
            }
            for e in previous.iter() {
                edges.insert_casual(e.a, e.b);
            }
            edges
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetworkViolation {
    OddDegreeSum {
        sum: u64,
    },
    SelfLoop {
        node: NodeId,
    },
    DuplicateEdge {
        a: NodeId,
        b: NodeId,
    },
    DegreeMismatch {
        node: NodeId,
        expected: u32,
        actual: u32,
    },
    MultipleSteadyEdges {
        node: NodeId,
        count: u32,
    },
}

impl std::fmt::Display for NetworkViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NetworkViolation::OddDegreeSum { sum } => write!(f, "odd degree sum {sum}"),
            NetworkViolation::SelfLoop { node } => write!(f, "loop at node {node}"),
            NetworkViolation::DuplicateEdge { a, b } => write!(f, "multi-edge {a}-{b}"),
            NetworkViolation::DegreeMismatch {
                node,
                expected,
                actual,
            } => write!(f, "node {node} has {actual} edges, degree says {expected}"),
            NetworkViolation::MultipleSteadyEdges { node, count } => {
                write!(f, "node {node} has {count} steady edges")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub violations: Vec<NetworkViolation>,
}

impl NetworkReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit an edge set against its degree sequence: parity, loops,
/// multi-edges, per-node incident counts, and the one-steady-edge rule.
pub fn validate_network(edges: &EdgeSet, seq: &DegreeSequence) -> NetworkReport {
    let mut violations = Vec::new();
    let sum = seq.sum();
    if sum % 2 == 1 {
        violations.push(NetworkViolation::OddDegreeSum { sum });
    }
    let mut seen: HashSet<u64> = HashSet::with_capacity(edges.len());
    let mut incident = vec![0u32; seq.len()];
    let mut steady = vec![0u32; seq.len()];
    for e in edges.iter() {
        if e.a == e.b {
            violations.push(NetworkViolation::SelfLoop { node: e.a });
            continue;
        }
        if !seen.insert(pack(e.a, e.b)) {
            violations.push(NetworkViolation::DuplicateEdge { a: e.a, b: e.b });
        }
        incident[e.a as usize] += 1;
        incident[e.b as usize] += 1;
        if e.tag == EdgeTag::Steady {
            steady[e.a as usize] += 1;
            steady[e.b as usize] += 1;
        }
    }
    for node in 0..seq.len() {
        let expected = seq.degree(node as NodeId);
        if incident[node] != expected {
            violations.push(NetworkViolation::DegreeMismatch {
                node: node as NodeId,
                expected,
                actual: incident[node],
            });
        }
        if steady[node] > 1 {
            violations.push(NetworkViolation::MultipleSteadyEdges {
                node: node as NodeId,
                count: steady[node],
            });
        }
    }
    NetworkReport { violations }
}
