//! Greedy maximum coverage over a [`SampleSet`].
//!
//! Tuples that never reached a rumor seed are covered by every seed set, so
//! they are left out of the index and added to the total as a constant;
//! they cannot change which node has the largest marginal gain.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeSet};
use crate::rtuple::SampleSet;

/// Candidate limit for [`optimal_coverage_bruteforce`].
pub const BRUTEFORCE_CANDIDATES: usize = 20;
/// Budget limit for [`optimal_coverage_bruteforce`].
pub const BRUTEFORCE_BUDGET: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    /// Seeds in pick order.
    pub seeds: Vec<NodeId>,
    /// Marginal coverage of each pick.
    pub gains: Vec<usize>,
    /// `F(seeds, R)`.
    pub covered: usize,
}

fn check(r: &SampleSet, k: usize, forbidden: &NodeSet) -> Result<()> {
    if k < 1 {
        return Err(Error::param("budget k must be at least 1"));
    }
    if forbidden.universe() != r.node_count() {
        return Err(Error::param("forbidden set does not match the sample set"));
    }
    if forbidden.len() >= r.node_count() {
        return Err(Error::param("every node is forbidden"));
    }
    Ok(())
}

/// Greedy max coverage with lazy re-evaluation. Picks the non-forbidden node
/// covering the most uncovered tuples, ties to the lowest id, and stops early
/// once no node adds coverage.
pub fn select_nodes(r: &SampleSet, k: usize, forbidden: &NodeSet) -> Result<SelectionResult> {
    check(r, k, forbidden)?;
    let mut covered_flag = vec![false; r.len()];
    // stale gains are upper bounds because coverage is submodular
    let mut heap: BinaryHeap<(usize, Reverse<NodeId>)> = (0..r.node_count() as NodeId)
        .filter(|&v| !forbidden.contains(v))
        .map(|v| (r.tuples_containing(v).len(), Reverse(v)))
        .filter(|&(gain, _)| gain > 0)
        .collect();

    let mut out = SelectionResult {
        seeds: Vec::new(),
        gains: Vec::new(),
        covered: r.count_b0(),
    };
    while out.seeds.len() < k {
        let Some((bound, Reverse(v))) = heap.pop() else {
            break;
        };
        let gain = r
            .tuples_containing(v)
            .iter()
            .filter(|&&i| !covered_flag[i as usize])
            .count();
        if gain < bound {
            if gain > 0 {
                heap.push((gain, Reverse(v)));
            }
            continue;
        }
        for &i in r.tuples_containing(v) {
            covered_flag[i as usize] = true;
        }
        out.seeds.push(v);
        out.gains.push(gain);
        out.covered += gain;
    }
    Ok(out)
}

/// Plain greedy that recomputes every marginal gain each round. Reference
/// for the lazy version.
pub fn select_nodes_naive(r: &SampleSet, k: usize, forbidden: &NodeSet) -> Result<SelectionResult> {
    check(r, k, forbidden)?;
    let mut covered_flag = vec![false; r.len()];
    let mut chosen = vec![false; r.node_count()];
    let mut out = SelectionResult {
        seeds: Vec::new(),
        gains: Vec::new(),
        covered: r.count_b0(),
    };
    while out.seeds.len() < k {
        let mut best: Option<(usize, NodeId)> = None;
        for v in 0..r.node_count() as NodeId {
            if forbidden.contains(v) || chosen[v as usize] {
                continue;
            }
            let gain = r
                .tuples_containing(v)
                .iter()
                .filter(|&&i| !covered_flag[i as usize])
                .count();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, v));
            }
        }
        match best {
            Some((gain, v)) if gain > 0 => {
                chosen[v as usize] = true;
                for &i in r.tuples_containing(v) {
                    covered_flag[i as usize] = true;
                }
                out.seeds.push(v);
                out.gains.push(gain);
                out.covered += gain;
            }
            _ => break,
        }
    }
    Ok(out)
}

/// Exact `max F(S, R)` over `|S| <= k`, `S` disjoint from `forbidden`.
///
/// Only nodes that appear in some rumor-reaching tuple are enumerated; the
/// guards apply to that candidate count and to `k`.
pub fn optimal_coverage_bruteforce(r: &SampleSet, k: usize, forbidden: &NodeSet) -> Result<usize> {
    check(r, k, forbidden)?;
    if k > BRUTEFORCE_BUDGET {
        return Err(Error::GuardExceeded {
            what: "brute-force budget",
            actual: k,
            limit: BRUTEFORCE_BUDGET,
        });
    }
    let candidates: Vec<NodeId> = (0..r.node_count() as NodeId)
        .filter(|&v| !forbidden.contains(v) && !r.tuples_containing(v).is_empty())
        .collect();
    if candidates.len() > BRUTEFORCE_CANDIDATES {
        return Err(Error::GuardExceeded {
            what: "brute-force candidate count",
            actual: candidates.len(),
            limit: BRUTEFORCE_CANDIDATES,
        });
    }
    let size = k.min(candidates.len());
    let mut best = r.count_b0();
    let mut pick: Vec<usize> = (0..size).collect();
    let mut seen = vec![u32::MAX; r.len()];
    let mut stamp = 0u32;
    loop {
        stamp += 1;
        let mut covered = r.count_b0();
        for &c in &pick {
            for &i in r.tuples_containing(candidates[c]) {
                if seen[i as usize] != stamp {
                    seen[i as usize] = stamp;
                    covered += 1;
                }
            }
        }
        best = best.max(covered);
        // next combination in lexicographic order
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
    Ok(best)
}
