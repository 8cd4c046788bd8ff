//! Shared fixtures for unit tests.

use rand::Rng;

use crate::graph::{Graph, NodeId};

/// Random small graph with mixed probabilities.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, max_edges: usize) -> Graph {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for _ in 0..max_edges * 3 {
        if edges.len() == max_edges {
            break;
        }
        let u = rng.random_range(0..n as NodeId);
        let v = rng.random_range(0..n as NodeId);
        if u != v && seen.insert((u, v)) {
            let p = match rng.random_range(0..4) {
                0 => 1.0,
                1 => 0.0,
                _ => rng.random_range(0.05..0.95),
            };
            edges.push((u, v, p));
        }
    }
    Graph::from_edge_list(n, &edges).unwrap()
}
