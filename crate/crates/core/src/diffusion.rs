//! Forward competitive cascades.
//!
//! Two cascades spread in synchronous rounds: rumor from `S_r` and positive
//! from `S_p`. A node keeps the first cascade to reach it; if both reach it
//! in the same round it becomes a rumor node. Everything here is either the
//! objective itself or an oracle for the reverse-sampling estimator.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::rng;

/// Realizations with more edges than this are not enumerated by [`exact_f`].
pub const EXACT_EDGE_GUARD: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Inactive,
    Rumor,
    Positive,
}

/// A deterministic sample of `G`: every edge is either live (probability 1)
/// or absent.
#[derive(Debug, Clone)]
pub struct Realization<'g> {
    graph: &'g Graph,
    present: Vec<bool>,
}

impl<'g> Realization<'g> {
    pub fn from_mask(graph: &'g Graph, present: Vec<bool>) -> Result<Self> {
        if present.len() != graph.edge_count() {
            return Err(Error::param(format!(
                "mask has {} entries for {} edges",
                present.len(),
                graph.edge_count()
            )));
        }
        Ok(Realization { graph, present })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    #[inline]
    pub fn is_live(&self, edge: usize) -> bool {
        self.present[edge]
    }

    pub fn mask(&self) -> &[bool] {
        &self.present
    }

    pub fn live_count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    /// `Pr[g]`: product of `p_e` over live edges and `1 - p_e` over the rest.
    pub fn probability(&self) -> f64 {
        self.present
            .iter()
            .enumerate()
            .map(|(e, &live)| {
                let p = self.graph.edge_probability(e);
                if live {
                    p
                } else {
                    1.0 - p
                }
            })
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionOutcome {
    pub state: Vec<NodeState>,
    /// Round in which each node was activated; `None` if never.
    pub activation_time: Vec<Option<u32>>,
}

impl DiffusionOutcome {
    pub fn rumor_count(&self) -> usize {
        self.state
            .iter()
            .filter(|&&s| s == NodeState::Rumor)
            .count()
    }

    /// Nodes not activated by rumor (the quantity `f` averages).
    pub fn saved_count(&self) -> usize {
        self.state.len() - self.rumor_count()
    }

    pub fn is_saved(&self, v: NodeId) -> bool {
        self.state[v as usize] != NodeState::Rumor
    }
}

pub(crate) fn check_seeds(g: &Graph, rumor: &NodeSet, positive: &NodeSet) -> Result<()> {
    let n = g.node_count();
    for s in [rumor, positive] {
        if s.universe() != n {
            return Err(Error::param(format!(
                "seed set built for {} nodes, graph has {n}",
                s.universe()
            )));
        }
    }
    match rumor.first_common(positive) {
        Some(v) => Err(Error::OverlappingSeeds(v as usize)),
        None => Ok(()),
    }
}

pub fn sample_realization<'g, R: Rng + ?Sized>(g: &'g Graph, rng: &mut R) -> Realization<'g> {
    let present = (0..g.edge_count())
        .map(|e| rng.random::<f64>() < g.edge_probability(e))
        .collect();
    Realization { graph: g, present }
}

/// Runs the deterministic diffusion on a realization.
pub fn diffuse_on_realization(
    r: &Realization<'_>,
    rumor: &NodeSet,
    positive: &NodeSet,
) -> Result<DiffusionOutcome> {
    let g = r.graph;
    check_seeds(g, rumor, positive)?;
    let n = g.node_count();
    let mut state = vec![NodeState::Inactive; n];
    let mut time = vec![None; n];
    let mut frontier: Vec<NodeId> = Vec::new();
    for (set, label) in [(rumor, NodeState::Rumor), (positive, NodeState::Positive)] {
        for &v in set.as_slice() {
            state[v as usize] = label;
            time[v as usize] = Some(0);
            frontier.push(v);
        }
    }

    let mut round = 0u32;
    let mut hit_rumor = vec![false; n];
    let mut hit_positive = vec![false; n];
    let mut touched = Vec::new();
    while !frontier.is_empty() {
        round += 1;
        for &u in &frontier {
            let from_rumor = state[u as usize] == NodeState::Rumor;
            for e in g.out_edge_range(u) {
                let v = g.edge_target(e) as usize;
                if state[v] != NodeState::Inactive || !r.present[e] {
                    continue;
                }
                if !hit_rumor[v] && !hit_positive[v] {
                    touched.push(v as NodeId);
                }
                if from_rumor {
                    hit_rumor[v] = true;
                } else {
                    hit_positive[v] = true;
                }
            }
        }
        frontier.clear();
        for &v in &touched {
            let vi = v as usize;
            state[vi] = if hit_rumor[vi] {
                NodeState::Rumor
            } else {
                NodeState::Positive
            };
            time[vi] = Some(round);
            hit_rumor[vi] = false;
            hit_positive[vi] = false;
            frontier.push(v);
        }
        touched.clear();
    }

    Ok(DiffusionOutcome {
        state,
        activation_time: time,
    })
}

/// Multi-source BFS distances over live edges; `u32::MAX` means unreachable.
pub fn live_distances(r: &Realization<'_>, sources: &[NodeId]) -> Vec<u32> {
    let g = r.graph;
    let mut dist = vec![u32::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize] + 1;
        for e in g.out_edge_range(u) {
            let v = g.edge_target(e) as usize;
            if r.present[e] && dist[v] == u32::MAX {
                dist[v] = d;
                queue.push_back(v as NodeId);
            }
        }
    }
    dist
}

/// Per-node "not rumor-activated" flag from the shortest-path condition:
/// `u` escapes rumor iff rumor cannot reach it or positive reaches it
/// strictly earlier.
pub fn rumor_free_flags(
    r: &Realization<'_>,
    rumor: &NodeSet,
    positive: &NodeSet,
) -> Result<Vec<bool>> {
    check_seeds(r.graph, rumor, positive)?;
    let dr = live_distances(r, rumor.as_slice());
    let dp = live_distances(r, positive.as_slice());
    Ok(dr
        .iter()
        .zip(&dp)
        .map(|(&a, &b)| a == u32::MAX || b < a)
        .collect())
}

const INACTIVE: u8 = 0;
const RUMOR: u8 = 1;
const POSITIVE: u8 = 2;
const PENDING_POSITIVE: u8 = 3;
const PENDING_RUMOR: u8 = 4;

/// Scratch buffers for repeated stochastic simulations on one graph.
#[derive(Debug, Clone)]
pub struct SimWorkspace {
    state: Vec<u8>,
    activated: Vec<NodeId>,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl SimWorkspace {
    pub fn new(n: usize) -> Self {
        SimWorkspace {
            state: vec![INACTIVE; n],
            activated: Vec::new(),
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    #[inline]
    fn attempt(&mut self, v: NodeId, from_rumor: bool) {
        let s = &mut self.state[v as usize];
        match *s {
            INACTIVE => {
                *s = if from_rumor {
                    PENDING_RUMOR
                } else {
                    PENDING_POSITIVE
                };
                self.next.push(v);
            }
            PENDING_POSITIVE if from_rumor => *s = PENDING_RUMOR,
            _ => {}
        }
    }
}

/// One stochastic competitive cascade; returns the number of rumor nodes.
///
/// Edges are flipped lazily when their source activates, which has the same
/// distribution as diffusing on a freshly sampled realization. The run stops
/// once the rumor frontier is empty since positive spread can no longer
/// change the rumor count. Seeds must be disjoint and in range.
pub fn simulate_rumor_count<R: Rng + ?Sized>(
    g: &Graph,
    rumor: &[NodeId],
    positive: &[NodeId],
    rng: &mut R,
    ws: &mut SimWorkspace,
) -> usize {
    let mut rumor_total = 0usize;
    let mut rumor_live = 0usize;
    for &v in rumor {
        ws.state[v as usize] = RUMOR;
        ws.activated.push(v);
        ws.frontier.push(v);
        rumor_total += 1;
        rumor_live += 1;
    }
    for &v in positive {
        ws.state[v as usize] = POSITIVE;
        ws.activated.push(v);
        ws.frontier.push(v);
    }

    // with a shared probability, jump straight to the next live edge
    let log_miss = match g.uniform_probability() {
        Some(p) if p > 0.0 && p < 1.0 => Some((1.0 - p).ln()),
        _ => None,
    };

    let mut frontier = std::mem::take(&mut ws.frontier);
    while rumor_live > 0 {
        rumor_live = 0;
        for &u in &frontier {
            let from_rumor = ws.state[u as usize] == RUMOR;
            let targets = g.out_targets_of(u);
            if let Some(lm) = log_miss {
                let mut j = 0usize;
                loop {
                    let r: f64 = rng.random();
                    // r = 0 gives an infinite skip, which saturates
                    j = j.saturating_add(((1.0 - r).ln() / lm) as usize);
                    if j >= targets.len() {
                        break;
                    }
                    ws.attempt(targets[j], from_rumor);
                    j += 1;
                }
            } else {
                for (&v, &p) in targets.iter().zip(g.out_probs_of(u)) {
                    let s = ws.state[v as usize];
                    let open = s == INACTIVE || (from_rumor && s == PENDING_POSITIVE);
                    if open && (p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p)) {
                        ws.attempt(v, from_rumor);
                    }
                }
            }
        }
        frontier.clear();
        for &v in &ws.next {
            let s = &mut ws.state[v as usize];
            if *s == PENDING_RUMOR {
                *s = RUMOR;
                rumor_total += 1;
                rumor_live += 1;
            } else {
                *s = POSITIVE;
            }
            ws.activated.push(v);
            frontier.push(v);
        }
        ws.next.clear();
    }

    for &v in &ws.activated {
        ws.state[v as usize] = INACTIVE;
    }
    ws.activated.clear();
    frontier.clear();
    ws.frontier = frontier;
    rumor_total
}

/// Mean number of nodes not activated by rumor over `trials` independent
/// cascades drawn from `rng`.
pub fn estimate_f_monte_carlo<R: Rng + ?Sized>(
    g: &Graph,
    rumor: &NodeSet,
    positive: &NodeSet,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    check_seeds(g, rumor, positive)?;
    if trials == 0 {
        return Err(Error::param("Monte Carlo needs at least one trial"));
    }
    let mut ws = SimWorkspace::new(g.node_count());
    let n = g.node_count();
    let saved: usize = (0..trials)
        .map(|_| n - simulate_rumor_count(g, rumor.as_slice(), positive.as_slice(), rng, &mut ws))
        .sum();
    Ok(saved as f64 / trials as f64)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Parallel Monte Carlo; trial `i` draws from its own stream so the result
/// is independent of the worker count.
pub fn estimate_f_parallel(
    g: &Graph,
    rumor: &NodeSet,
    positive: &NodeSet,
    trials: usize,
    master_seed: u64,
) -> Result<Estimate> {
    check_seeds(g, rumor, positive)?;
    if trials == 0 {
        return Err(Error::param("Monte Carlo needs at least one trial"));
    }
    let n = g.node_count();
    const BATCH: usize = 256;
    let batches = trials.div_ceil(BATCH);
    let (sum, sum_sq) = (0..batches)
        .into_par_iter()
        .map_init(
            || SimWorkspace::new(n),
            |ws, b| {
                let mut acc = (0.0f64, 0.0f64);
                for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                    let mut rng = rng::stream(master_seed, rng::domain::MONTE_CARLO, t as u64);
                    let saved = (n - simulate_rumor_count(
                        g,
                        rumor.as_slice(),
                        positive.as_slice(),
                        &mut rng,
                        ws,
                    )) as f64;
                    acc.0 += saved;
                    acc.1 += saved * saved;
                }
                acc
            },
        )
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = sum / trials as f64;
    let var = if trials > 1 {
        ((sum_sq - trials as f64 * mean * mean) / (trials - 1) as f64).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        stderr: (var / trials as f64).sqrt(),
        samples: trials,
    })
}

/// `f(S_p)` by enumerating all `2^m` realizations. Ground truth for tests.
pub fn exact_f(g: &Graph, rumor: &NodeSet, positive: &NodeSet) -> Result<f64> {
    check_seeds(g, rumor, positive)?;
    let m = g.edge_count();
    if m > EXACT_EDGE_GUARD {
        return Err(Error::GuardExceeded {
            what: "edge count for exact enumeration",
            actual: m,
            limit: EXACT_EDGE_GUARD,
        });
    }
    let mut total = 0.0;
    for bits in 0u32..(1u32 << m) {
        let mask: Vec<bool> = (0..m).map(|e| bits >> e & 1 == 1).collect();
        let r = Realization {
            graph: g,
            present: mask,
        };
        let pr = r.probability();
        if pr == 0.0 {
            continue;
        }
        let out = diffuse_on_realization(&r, rumor, positive)?;
        total += pr * out.saved_count() as f64;
    }
    Ok(total)
}

/// Exact `OPT_k`: the best `exact_f` over all positive seed sets of size
/// `min(k, n - |S_r|)` drawn outside the rumor seeds. Returns the optimum and
/// one maximizing set (lexicographically first).
pub fn exact_optimum(g: &Graph, rumor: &NodeSet, k: usize) -> Result<(f64, Vec<NodeId>)> {
    check_seeds(g, rumor, &NodeSet::empty(g.node_count()))?;
    let candidates: Vec<NodeId> = (0..g.node_count() as NodeId)
        .filter(|&v| !rumor.contains(v))
        .collect();
    if candidates.len() > EXACT_EDGE_GUARD {
        return Err(Error::GuardExceeded {
            what: "candidate count for exact optimum",
            actual: candidates.len(),
            limit: EXACT_EDGE_GUARD,
        });
    }
    let size = k.min(candidates.len());
    let mut pick: Vec<usize> = (0..size).collect();
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    loop {
        let seeds: Vec<NodeId> = pick.iter().map(|&i| candidates[i]).collect();
        let f = exact_f(
            g,
            rumor,
            &NodeSet::new(g.node_count(), seeds.iter().copied())?,
        )?;
        if best.as_ref().is_none_or(|(b, _)| f > *b + 1e-12) {
            best = Some((f, seeds));
        }
        let Some(pos) = (0..size)
            .rev()
            .find(|&i| pick[i] < candidates.len() - size + i)
        else {
            break;
        };
        pick[pos] += 1;
        for j in pos + 1..size {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(best.expect("at least the empty combination is visited"))
}
