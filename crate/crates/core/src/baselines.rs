//! Comparison seed selectors.

use rand::seq::index;
use rayon::prelude::*;

use crate::diffusion::{check_seeds, simulate_rumor_count, SimWorkspace};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::rng::{self, domain};

/// The non-tuple selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Simulations per estimate.
    GreedyMc(usize),
    Proximity,
    Random,
    Unblocking,
}

impl BaselineKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaselineKind::GreedyMc(0) => {
                Err(Error::param("GreedyMC needs at least one simulation"))
            }
            _ => Ok(()),
        }
    }
}

fn check_rumor(g: &Graph, rumor: &NodeSet) -> Result<()> {
    if rumor.universe() != g.node_count() {
        return Err(Error::param("rumor seed set does not match the graph"));
    }
    Ok(())
}

/// Hill climbing on Monte Carlo estimates of `f`.
///
/// Each round scores every remaining candidate with `sims` fresh forward
/// simulations and keeps the best, ties to the lowest id. Candidate `v` in
/// round `r` draws from stream `(master, [GREEDY_MC, r], v)`, so candidates
/// can be scored in parallel without affecting the result.
pub fn greedy_mc(
    g: &Graph,
    rumor: &NodeSet,
    k: usize,
    sims: usize,
    master_seed: u64,
) -> Result<Vec<NodeId>> {
    BaselineKind::GreedyMc(sims).validate()?;
    check_rumor(g, rumor)?;
    let n = g.node_count();
    let mut chosen = NodeSet::empty(n);
    let mut seeds = Vec::new();
    for round in 0..k {
        let candidates: Vec<NodeId> = (0..n as NodeId)
            .filter(|&v| !rumor.contains(v) && !chosen.contains(v))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let base: Vec<NodeId> = chosen.as_slice().to_vec();
        let best = candidates
            .par_iter()
            .map_init(
                || (SimWorkspace::new(n), base.clone()),
                |(ws, positive), &v| {
                    positive.push(v);
                    let mut rng =
                        rng::stream_path(master_seed, &[domain::GREEDY_MC, round as u64], v as u64);
                    let saved: usize = (0..sims)
                        .map(|_| {
                            n - simulate_rumor_count(g, rumor.as_slice(), positive, &mut rng, ws)
                        })
                        .sum();
                    positive.pop();
                    (saved, v)
                },
            )
            .reduce_with(|a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            })
            .expect("candidates is nonempty");
        chosen.insert(best.1);
        seeds.push(best.1);
    }
    Ok(seeds)
}

/// Out-neighbours of the rumor seeds, highest id first, padded with the
/// highest-id remaining nodes when there are fewer than `k`.
pub fn proximity(g: &Graph, rumor: &NodeSet, k: usize) -> Result<Vec<NodeId>> {
    check_rumor(g, rumor)?;
    let mut near: Vec<NodeId> = rumor
        .as_slice()
        .iter()
        .flat_map(|&r| g.out_targets_of(r).iter().copied())
        .filter(|&v| !rumor.contains(v))
        .collect();
    near.sort_unstable_by(|a, b| b.cmp(a));
    near.dedup();
    near.truncate(k);
    if near.len() < k {
        let taken = NodeSet::new(g.node_count(), near.iter().copied())?;
        let fill: Vec<NodeId> = (0..g.node_count() as NodeId)
            .rev()
            .filter(|&v| !rumor.contains(v) && !taken.contains(v))
            .take(k - near.len())
            .collect();
        near.extend(fill);
    }
    Ok(near)
}

/// `k` nodes drawn uniformly without replacement from `V \ S_r`.
pub fn random_seeds(g: &Graph, rumor: &NodeSet, k: usize, master_seed: u64) -> Result<Vec<NodeId>> {
    check_rumor(g, rumor)?;
    let pool: Vec<NodeId> = (0..g.node_count() as NodeId)
        .filter(|&v| !rumor.contains(v))
        .collect();
    if k > pool.len() {
        return Err(Error::param(format!(
            "cannot draw {k} random seeds from {} non-rumor nodes",
            pool.len()
        )));
    }
    let mut rng = rng::stream(master_seed, domain::RANDOM_SEEDS, 0);
    Ok(index::sample(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Checks a baseline's output contract; used by callers that accept seed
/// lists from outside.
pub fn check_disjoint(g: &Graph, rumor: &NodeSet, seeds: &[NodeId]) -> Result<NodeSet> {
    let s = NodeSet::new(g.node_count(), seeds.iter().copied())?;
    check_seeds(g, rumor, &s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::exact_f;
    use crate::rng::stream;
    use crate::testutil::random_graph;
    use rand::Rng;

    fn set(n: usize, v: &[NodeId]) -> NodeSet {
        NodeSet::new(n, v.iter().copied()).unwrap()
    }

    fn exact_greedy(g: &Graph, rumor: &NodeSet, k: usize) -> Vec<NodeId> {
        let n = g.node_count();
        let mut seeds: Vec<NodeId> = Vec::new();
        for _ in 0..k {
            let mut best: Option<(f64, NodeId)> = None;
            for v in 0..n as NodeId {
                if rumor.contains(v) || seeds.contains(&v) {
                    continue;
                }
                let mut s = seeds.clone();
                s.push(v);
                let f = exact_f(g, rumor, &set(n, &s)).unwrap();
                if best.is_none_or(|(b, _)| f > b + 1e-9) {
                    best = Some((f, v));
                }
            }
            match best {
                Some((_, v)) => seeds.push(v),
                None => break,
            }
        }
        seeds
    }

    #[test]
    fn greedy_on_chain_picks_the_neighbour() {
        let g = Graph::from_edge_list(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let r = set(3, &[0]);
        assert_eq!(greedy_mc(&g, &r, 1, 10, 1).unwrap(), vec![1]);
        assert_eq!(exact_greedy(&g, &r, 1), vec![1]);
        assert!(greedy_mc(&g, &r, 0, 10, 1).unwrap().is_empty());
        assert!(greedy_mc(&g, &r, 1, 0, 1).is_err());
    }

    #[test]
    fn one_simulation_is_exact_on_deterministic_graphs() {
        let mut rng = stream(21, 0, 0);
        for _ in 0..30 {
            let n = 9;
            let edges: Vec<(NodeId, NodeId, f64)> = random_graph(&mut rng, n, 14)
                .edges()
                .map(|(u, v, p)| (u, v, if p >= 0.5 { 1.0 } else { 0.0 }))
                .collect();
            let g = Graph::from_edge_list(n, &edges).unwrap();
            let r = set(n, &[rng.random_range(0..n as NodeId)]);
            assert_eq!(greedy_mc(&g, &r, 3, 1, 4).unwrap(), exact_greedy(&g, &r, 3));
        }
    }

    #[test]
    fn many_simulations_follow_exact_greedy() {
        // gaps chosen so 20k simulations separate the candidates easily
        let g = Graph::from_edge_list(
            6,
            &[
                (0, 1, 0.9),
                (1, 2, 0.8),
                (2, 3, 0.7),
                (0, 4, 0.5),
                (4, 5, 0.9),
            ],
        )
        .unwrap();
        let r = set(6, &[0]);
        assert_eq!(
            greedy_mc(&g, &r, 2, 20_000, 2).unwrap(),
            exact_greedy(&g, &r, 2)
        );
    }

    #[test]
    fn greedy_is_worker_invariant() {
        let mut rng = stream(22, 0, 0);
        let g = random_graph(&mut rng, 25, 70);
        let r = set(25, &[0, 1]);
        let a = greedy_mc(&g, &r, 3, 50, 8).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        assert_eq!(a, pool.install(|| greedy_mc(&g, &r, 3, 50, 8).unwrap()));
    }

    #[test]
    fn proximity_prefers_high_index_neighbours() {
        let g = Graph::from_edge_list(8, &[(0, 3, 0.1), (0, 7, 0.1), (0, 5, 0.1)]).unwrap();
        let r = set(8, &[0]);
        assert_eq!(proximity(&g, &r, 2).unwrap(), vec![7, 5]);
        assert_eq!(proximity(&g, &r, 5).unwrap(), vec![7, 5, 3, 6, 4]);
    }

    #[test]
    fn proximity_fills_when_no_neighbours() {
        let g = Graph::from_edge_list(5, &[(1, 0, 0.5)]).unwrap();
        assert_eq!(proximity(&g, &set(5, &[0]), 1).unwrap(), vec![4]);
        let g = Graph::from_edge_list(5, &[(0, 4, 0.5), (4, 0, 0.5)]).unwrap();
        assert_eq!(proximity(&g, &set(5, &[0, 4]), 2).unwrap(), vec![3, 2]);
        assert_eq!(proximity(&g, &set(5, &[0, 4]), 10).unwrap().len(), 3);
    }

    #[test]
    fn random_takes_everything_when_asked() {
        let g = Graph::from_edge_list(6, &[(0, 1, 0.5)]).unwrap();
        let r = set(6, &[2]);
        let mut all = random_seeds(&g, &r, 5, 3).unwrap();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 3, 4, 5]);
        assert!(random_seeds(&g, &r, 6, 3).is_err());
        assert_eq!(
            random_seeds(&g, &r, 3, 3).unwrap(),
            random_seeds(&g, &r, 3, 3).unwrap()
        );
    }

    #[test]
    fn random_is_uniform() {
        let n = 10;
        let g = Graph::from_edge_list(n, &[(0, 1, 0.5)]).unwrap();
        let r = set(n, &[0]);
        let draws = 100_000;
        let k = 3;
        let mut counts = [0usize; 10];
        for s in 0..draws {
            for v in random_seeds(&g, &r, k, s).unwrap() {
                counts[v as usize] += 1;
            }
        }
        assert_eq!(counts[0], 0);
        let p = k as f64 / 9.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - mean).abs() < 4.5 * sd, "{counts:?}");
        }
    }

    #[test]
    fn outputs_avoid_rumor_seeds() {
        let mut rng = stream(23, 0, 0);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 15, 40);
            let r = set(15, &[0, 3, 7]);
            let k = rng.random_range(0..6);
            for seeds in [
                greedy_mc(&g, &r, k, 5, 1).unwrap(),
                proximity(&g, &r, k).unwrap(),
                random_seeds(&g, &r, k, 1).unwrap(),
            ] {
                assert!(seeds.len() <= k);
                assert!(check_disjoint(&g, &r, &seeds).is_ok());
            }
        }
    }
}
