//! Directed propagation networks.
//!
//! A [`Graph`] stores both adjacency directions in CSR form. Edge ids are
//! positions in the out-adjacency arrays, which are sorted by
//! `(source, target)`; the in-adjacency carries the id of each edge so
//! realizations can be indexed from either side.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = u32;
pub type EdgeId = u32;

/// How propagation probabilities are assigned to the edges of a loaded file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightingModel {
    /// Every edge gets the same probability (CP model uses 0.1).
    Constant(f64),
    /// `p(u, v) = 1 / in_degree(v)`.
    WeightedCascade,
    /// Probabilities are read from the third column.
    FromFile,
}

impl WeightingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightingModel::Constant(p) if !(0.0..=1.0).contains(&p) => Err(Error::param(format!(
                "constant probability {p} outside [0, 1]"
            ))),
            _ => Ok(()),
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            WeightingModel::Constant(p) => format!("CP({p})"),
            WeightingModel::WeightedCascade => "WC".to_string(),
            WeightingModel::FromFile => "file".to_string(),
        }
    }
}

/// Accepts `cp` (p = 0.1), `cp:<p>`, `wc` and `file`.
impl std::str::FromStr for WeightingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let model = match lower.as_str() {
            "cp" => WeightingModel::Constant(0.1),
            "wc" => WeightingModel::WeightedCascade,
            "file" => WeightingModel::FromFile,
            other => match other.strip_prefix("cp:") {
                Some(p) => WeightingModel::Constant(
                    p.parse()
                        .map_err(|_| Error::param(format!("bad probability in model `{s}`")))?,
                ),
                None => return Err(Error::param(format!("unknown weighting model `{s}`"))),
            },
        };
        model.validate()?;
        Ok(model)
    }
}

/// Which degree ranks nodes in [`degree_top_k`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeKind {
    #[default]
    Out,
    In,
    Total,
}

impl std::str::FromStr for DegreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "out" => Ok(DegreeKind::Out),
            "in" => Ok(DegreeKind::In),
            "total" => Ok(DegreeKind::Total),
            _ => Err(Error::param(format!("unknown degree kind `{s}`"))),
        }
    }
}

/// A duplicate-free, sorted set of node ids with O(1) membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    nodes: Vec<NodeId>,
    member: Vec<bool>,
}

impl NodeSet {
    pub fn new<I>(n: usize, nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = NodeId>,
    {
        let mut member = vec![false; n];
        let mut list = Vec::new();
        for v in nodes {
            let idx = v as usize;
            if idx >= n {
                return Err(Error::NodeOutOfRange { node: idx, n });
            }
            if !member[idx] {
                member[idx] = true;
                list.push(v);
            }
        }
        list.sort_unstable();
        Ok(NodeSet {
            nodes: list,
            member,
        })
    }

    pub fn empty(n: usize) -> Self {
        NodeSet {
            nodes: Vec::new(),
            member: vec![false; n],
        }
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.member.get(v as usize).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Size of the universe this set lives in.
    pub fn universe(&self) -> usize {
        self.member.len()
    }

    pub fn with(&self, v: NodeId) -> Self {
        let mut out = self.clone();
        out.insert(v);
        out
    }

    pub fn insert(&mut self, v: NodeId) {
        if !self.member[v as usize] {
            self.member[v as usize] = true;
            let pos = self.nodes.partition_point(|&x| x < v);
            self.nodes.insert(pos, v);
        }
    }

    /// First node contained in both sets, if any.
    pub fn first_common(&self, other: &NodeSet) -> Option<NodeId> {
        self.nodes.iter().copied().find(|&v| other.contains(v))
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    out_probs: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_probs: Vec<f64>,
    in_edge_ids: Vec<EdgeId>,
    labels: Vec<u64>,
    uniform_prob: Option<f64>,
}

impl Graph {
    /// Builds a graph over dense ids `0..labels.len()`.
    ///
    /// Rejects self-loops, duplicate ordered pairs and probabilities outside
    /// `[0, 1]`; callers that need lenient ingestion go through
    /// [`load_edge_list`].
    pub fn from_edges(labels: Vec<u64>, mut edges: Vec<(NodeId, NodeId, f64)>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        for &(u, v, p) in &edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::NodeOutOfRange {
                        node: w as usize,
                        n,
                    });
                }
            }
            if u == v {
                return Err(Error::param(format!("self-loop at node {u}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!(
                    "probability {p} on edge ({u}, {v}) outside [0, 1]"
                )));
            }
        }
        edges.sort_by_key(|&(u, v, _)| (u, v));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::param(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        if edges.len() > EdgeId::MAX as usize {
            return Err(Error::param("too many edges"));
        }

        let mut out_offsets = vec![0usize; n + 1];
        for &(u, _, _) in &edges {
            out_offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let out_targets: Vec<NodeId> = edges.iter().map(|e| e.1).collect();
        let out_probs: Vec<f64> = edges.iter().map(|e| e.2).collect();

        let mut in_offsets = vec![0usize; n + 1];
        for &(_, v, _) in &edges {
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let m = edges.len();
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0; m];
        let mut in_probs = vec![0.0; m];
        let mut in_edge_ids = vec![0; m];
        for (id, &(u, v, p)) in edges.iter().enumerate() {
            let slot = &mut cursor[v as usize];
            in_sources[*slot] = u;
            in_probs[*slot] = p;
            in_edge_ids[*slot] = id as EdgeId;
            *slot += 1;
        }

        let uniform_prob = match out_probs.first() {
            Some(&p) if out_probs.iter().all(|&q| q == p) => Some(p),
            _ => None,
        };

        Ok(Graph {
            out_offsets,
            out_targets,
            out_probs,
            in_offsets,
            in_sources,
            in_probs,
            in_edge_ids,
            labels,
            uniform_prob,
        })
    }

    /// Convenience constructor with labels equal to internal ids.
    pub fn from_edge_list(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        Self::from_edges((0..n as u64).collect(), edges.to_vec())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Internal id of an original label.
    pub fn node_of_label(&self, label: u64) -> Option<NodeId> {
        // labels are strictly increasing for loaded graphs, but not
        // necessarily for hand-built ones
        if self.labels.windows(2).all(|w| w[0] < w[1]) {
            self.labels.binary_search(&label).ok().map(|i| i as NodeId)
        } else {
            self.labels
                .iter()
                .position(|&l| l == label)
                .map(|i| i as NodeId)
        }
    }

    /// Returns the probability shared by every edge, if there is one.
    pub fn uniform_probability(&self) -> Option<f64> {
        self.uniform_prob
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// Edge-id range of `v`'s out-edges.
    #[inline]
    pub fn out_edge_range(&self, v: NodeId) -> std::ops::Range<usize> {
        self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]
    }

    #[inline]
    pub fn edge_target(&self, e: usize) -> NodeId {
        self.out_targets[e]
    }

    #[inline]
    pub fn edge_probability(&self, e: usize) -> f64 {
        self.out_probs[e]
    }

    #[inline]
    pub fn out_targets_of(&self, v: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_edge_range(v)]
    }

    #[inline]
    pub fn out_probs_of(&self, v: NodeId) -> &[f64] {
        &self.out_probs[self.out_edge_range(v)]
    }

    /// `(target, probability)` pairs of `v`'s out-edges.
    pub fn out_neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let r = self.out_edge_range(v);
        self.out_targets[r.clone()]
            .iter()
            .copied()
            .zip(self.out_probs[r].iter().copied())
    }

    /// `(source, probability, edge id)` triples of `v`'s in-edges.
    #[inline]
    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64, EdgeId)> + '_ {
        let r = self.in_offsets[v as usize]..self.in_offsets[v as usize + 1];
        self.in_sources[r.clone()]
            .iter()
            .copied()
            .zip(self.in_probs[r.clone()].iter().copied())
            .zip(self.in_edge_ids[r].iter().copied())
            .map(|((u, p), e)| (u, p, e))
    }

    /// `(source, target, probability)` for every edge, in edge-id order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |u| self.out_neighbors(u).map(move |(v, p)| (u, v, p)))
    }

    /// Source node of edge `e`.
    pub fn edge_source(&self, e: usize) -> NodeId {
        (self.out_offsets.partition_point(|&off| off <= e) - 1) as NodeId
    }

    /// Re-derives the out-adjacency from the in-adjacency and compares.
    pub fn adjacency_consistent(&self) -> bool {
        let mut from_in: Vec<(NodeId, NodeId, u64)> = (0..self.node_count() as NodeId)
            .flat_map(|v| self.in_edges(v).map(move |(u, p, _)| (u, v, p.to_bits())))
            .collect();
        from_in.sort_unstable();
        let from_out: Vec<(NodeId, NodeId, u64)> =
            self.edges().map(|(u, v, p)| (u, v, p.to_bits())).collect();
        from_in == from_out
            && (0..self.node_count() as NodeId).all(|v| {
                self.in_edges(v).all(|(u, _, e)| {
                    self.edge_source(e as usize) == u && self.edge_target(e as usize) == v
                })
            })
    }

    pub fn degree(&self, v: NodeId, kind: DegreeKind) -> usize {
        match kind {
            DegreeKind::Out => self.out_degree(v),
            DegreeKind::In => self.in_degree(v),
            DegreeKind::Total => self.out_degree(v) + self.in_degree(v),
        }
    }
}

/// Reads an edge list. See the module docs of the CLI for the format.
pub fn load_edge_list(path: impl AsRef<Path>, model: WeightingModel) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path, model)
}

pub(crate) fn parse_edge_list(text: &str, path: &Path, model: WeightingModel) -> Result<Graph> {
    model.validate()?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut raw: Vec<(u64, u64, Option<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(
                lineno,
                format!("expected `u v` or `u v p`, got {} fields", fields.len()),
            ));
        }
        let node = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_err(lineno, format!("bad node label `{s}`")))
        };
        let (u, v) = (node(fields[0])?, node(fields[1])?);
        let p = match fields.get(2) {
            Some(s) => {
                let p: f64 = s
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad probability `{s}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(parse_err(lineno, format!("probability {p} outside [0, 1]")));
                }
                Some(p)
            }
            None if model == WeightingModel::FromFile => {
                return Err(parse_err(lineno, "missing probability column".to_string()));
            }
            None => None,
        };
        raw.push((u, v, p));
    }

    let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v, _)| [u, v]).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if labels.len() > NodeId::MAX as usize {
        return Err(Error::param("too many nodes"));
    }
    let index: HashMap<u64, NodeId> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i as NodeId))
        .collect();

    let mut seen = std::collections::HashSet::new();
    let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(raw.len());
    for (u, v, p) in raw {
        if u == v {
            continue;
        }
        let (u, v) = (index[&u], index[&v]);
        if seen.insert((u, v)) {
            edges.push((u, v, p.unwrap_or(0.0)));
        }
    }

    match model {
        WeightingModel::Constant(c) => edges.iter_mut().for_each(|e| e.2 = c),
        WeightingModel::WeightedCascade => {
            let mut indeg = vec![0usize; labels.len()];
            for &(_, v, _) in &edges {
                indeg[v as usize] += 1;
            }
            edges
                .iter_mut()
                .for_each(|e| e.2 = 1.0 / indeg[e.1 as usize] as f64);
        }
        WeightingModel::FromFile => {}
    }

    Graph::from_edges(labels, edges)
}

/// Writes `u v p` lines using original labels, `p` with six decimals.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    for (u, v, p) in g.edges() {
        writeln!(out, "{} {} {:.6}", g.label(u), g.label(v), p)?;
    }
    out.flush()
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_edge_list(g, io::BufWriter::new(file))?;
    Ok(())
}

/// Generates a directed Chung–Lu expected-degree graph whose degree
/// sequence follows a power law with the given exponent.
///
/// Node `i` gets weight `(i + offset)^(-1/(exponent-1))`; out-weights follow
/// node order and in-weights are a seeded permutation of the same sequence.
/// The offset is chosen so the largest expected degree is at most
/// `sqrt(n * avg_out_degree)`, which keeps every pair probability below one
/// and the expected edge count at `n * avg_out_degree` (minus the few
/// self-loop slots). Edge probabilities are set to 1; reweight with
/// [`reweight`].
pub fn generate_power_law(
    n: usize,
    avg_out_degree: f64,
    exponent: f64,
    seed: u64,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param(format!(
            "power-law generator needs n >= 2, got {n}"
        )));
    }
    if n > NodeId::MAX as usize {
        return Err(Error::param("too many nodes"));
    }
    if exponent.is_nan() || exponent <= 1.0 || !exponent.is_finite() {
        return Err(Error::param(format!(
            "exponent must be > 1, got {exponent}"
        )));
    }
    if avg_out_degree.is_nan() || avg_out_degree <= 0.0 || avg_out_degree > (n - 1) as f64 {
        return Err(Error::param(format!(
            "average out-degree must be in (0, {}], got {avg_out_degree}",
            n - 1
        )));
    }

    let alpha = 1.0 / (exponent - 1.0);
    let total_edges = n as f64 * avg_out_degree;
    let cap = total_edges.sqrt().max(avg_out_degree);
    let max_expected = |offset: f64| {
        let sum: f64 = (0..n).map(|i| (i as f64 + offset).powf(-alpha)).sum();
        total_edges * offset.powf(-alpha) / sum
    };
    let offset = if max_expected(1.0) <= cap {
        1.0
    } else {
        // max_expected decreases monotonically towards avg_out_degree
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        while max_expected(hi) > cap && hi < 1e15 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if max_expected(mid) > cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let weights: Vec<f64> = (0..n).map(|i| (i as f64 + offset).powf(-alpha)).collect();
    let total: f64 = weights.iter().sum();
    // expected degree of rank i is total_edges * w_i / total, so pair (i, j)
    // has probability scale * w_i * w_j
    let scale = total_edges / (total * total);

    let mut rng = rng::stream(seed, rng::domain::GENERATOR, 0);
    let mut in_rank_to_node: Vec<NodeId> = (0..n as NodeId).collect();
    in_rank_to_node.shuffle(&mut rng);

    let mut edges = Vec::new();
    for u in 0..n {
        let wu = weights[u];
        let mut j = 0usize;
        let mut p = (scale * wu * weights[0]).min(1.0);
        // geometric skipping over in-ranks sorted by descending weight
        while j < n && p > 0.0 {
            if p < 1.0 {
                let r: f64 = rng.random();
                let skip = ((1.0 - r).ln() / (1.0 - p).ln()).floor();
                if !skip.is_finite() || skip >= (n - j) as f64 {
                    break;
                }
                j += skip as usize;
            }
            if j < n {
                let q = (scale * wu * weights[j]).min(1.0);
                let r: f64 = rng.random();
                if r < q / p {
                    let v = in_rank_to_node[j];
                    if v as usize != u {
                        edges.push((u as NodeId, v, 1.0));
                    }
                }
                p = q;
                j += 1;
            }
        }
    }

    Graph::from_edges((0..n as u64).collect(), edges)
}

/// Returns a copy of `g` with probabilities reassigned by `model`.
/// `FromFile` keeps the existing probabilities.
pub fn reweight(g: &Graph, model: WeightingModel) -> Result<Graph> {
    model.validate()?;
    let edges: Vec<(NodeId, NodeId, f64)> = g
        .edges()
        .map(|(u, v, p)| {
            let p = match model {
                WeightingModel::Constant(c) => c,
                WeightingModel::WeightedCascade => 1.0 / g.in_degree(v) as f64,
                WeightingModel::FromFile => p,
            };
            (u, v, p)
        })
        .collect();
    Graph::from_edges(g.labels().to_vec(), edges)
}

/// The `k` nodes of highest degree, ties broken by lower id.
pub fn degree_top_k(g: &Graph, k: usize, kind: DegreeKind) -> Result<Vec<NodeId>> {
    let n = g.node_count();
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds node count {n}")));
    }
    let mut nodes: Vec<NodeId> = (0..n as NodeId).collect();
    let key = |&v: &NodeId| (std::cmp::Reverse(g.degree(v, kind)), v);
    if k < n {
        nodes.select_nth_unstable_by_key(k, key);
        nodes.truncate(k);
    }
    nodes.sort_unstable_by_key(key);
    Ok(nodes)
}
