//! Reverse R-tuple sampling and coverage counting.
//!
//! An R-tuple is grown by a breadth-first search over in-edges from a root.
//! Each round the current frontier is checked against the rumor seeds
//! *before* it joins `V*`, so a frontier that contains a rumor seed is
//! discarded whole. This encodes the rule that rumor wins ties: only nodes
//! strictly closer to the root than every rumor seed can save it.
//!
//! Only in-edges of the newly added frontier are tested in each round, so
//! every edge is flipped at most once per tuple.

use std::io::{self, Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, NodeId, NodeSet};
use crate::rng;

/// One reverse sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RTuple {
    pub root: NodeId,
    /// Sorted.
    pub v_star: Vec<NodeId>,
    /// Whether a rumor seed was reached.
    pub b: bool,
    /// Live edges seen during the search (verification mode only).
    pub e_t: Option<Vec<EdgeId>>,
    /// Failed edges seen during the search (verification mode only).
    pub e_f: Option<Vec<EdgeId>>,
    /// Number of edge flips the search performed.
    pub edges_tested: u32,
}

/// Source of edge outcomes for the reverse search.
pub trait EdgeCoin {
    fn live(&mut self, edge: EdgeId, p: f64) -> bool;
}

/// Flips each tested edge with its probability.
pub struct RandomCoin<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> EdgeCoin for RandomCoin<'_, R> {
    #[inline]
    fn live(&mut self, _edge: EdgeId, p: f64) -> bool {
        p >= 1.0 || (p > 0.0 && self.0.random::<f64>() < p)
    }
}

/// Reads edge outcomes from a pre-sampled realization.
impl EdgeCoin for &crate::diffusion::Realization<'_> {
    #[inline]
    fn live(&mut self, edge: EdgeId, _p: f64) -> bool {
        self.is_live(edge as usize)
    }
}

/// Reusable scratch space for the reverse search.
#[derive(Debug, Clone)]
pub struct TupleWorkspace {
    in_star: Vec<u32>,
    in_next: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl TupleWorkspace {
    pub fn new(n: usize) -> Self {
        TupleWorkspace {
            in_star: vec![0; n],
            in_next: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn begin(&mut self) {
        if self.epoch == u32::MAX {
            self.in_star.fill(0);
            self.in_next.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }
}

/// Core reverse search shared by the random, verification and
/// realization-driven entry points.
pub fn grow_rtuple<C: EdgeCoin>(
    g: &Graph,
    rumor: &NodeSet,
    root: NodeId,
    coin: &mut C,
    verify: bool,
    ws: &mut TupleWorkspace,
) -> Result<RTuple> {
    let n = g.node_count();
    if root as usize >= n {
        return Err(Error::NodeOutOfRange {
            node: root as usize,
            n,
        });
    }
    ws.begin();
    let epoch = ws.epoch;
    let mut v_star = Vec::new();
    let mut e_t = Vec::new();
    let mut e_f = Vec::new();
    let mut tested = 0u32;

    ws.frontier.clear();
    ws.frontier.push(root);
    ws.in_next[root as usize] = epoch;
    let mut hit_rumor = rumor.contains(root);

    let b = loop {
        if ws.frontier.is_empty() {
            break false;
        }
        if hit_rumor {
            break true;
        }
        for &u in &ws.frontier {
            ws.in_star[u as usize] = epoch;
            v_star.push(u);
        }
        ws.next.clear();
        'frontier: for &u1 in &ws.frontier {
            for (u2, p, e) in g.in_edges(u1) {
                let i2 = u2 as usize;
                if ws.in_star[i2] == epoch {
                    continue;
                }
                let pending = ws.in_next[i2] == epoch;
                if pending && !verify {
                    // outcome cannot change V* or B
                    continue;
                }
                tested += 1;
                if coin.live(e, p) {
                    if verify {
                        e_t.push(e);
                    }
                    if !pending {
                        ws.in_next[i2] = epoch;
                        ws.next.push(u2);
                        if rumor.contains(u2) {
                            hit_rumor = true;
                            if !verify {
                                // the frontier is discarded next round anyway
                                break 'frontier;
                            }
                        }
                    }
                } else if verify {
                    e_f.push(e);
                }
            }
        }
        std::mem::swap(&mut ws.frontier, &mut ws.next);
    };

    v_star.sort_unstable();
    Ok(RTuple {
        root,
        v_star,
        b,
        e_t: verify.then_some(e_t),
        e_f: verify.then_some(e_f),
        edges_tested: tested,
    })
}

fn check_rumor(g: &Graph, rumor: &NodeSet) -> Result<()> {
    if rumor.universe() != g.node_count() {
        return Err(Error::param("rumor seed set does not match the graph"));
    }
    if rumor.is_empty() {
        return Err(Error::param("rumor seed set must be nonempty"));
    }
    Ok(())
}

/// A random R-tuple rooted at `v`.
pub fn sample_rtuple_of<R: Rng + ?Sized>(
    g: &Graph,
    rumor: &NodeSet,
    v: NodeId,
    rng: &mut R,
) -> Result<RTuple> {
    check_rumor(g, rumor)?;
    let mut ws = TupleWorkspace::new(g.node_count());
    grow_rtuple(g, rumor, v, &mut RandomCoin(rng), false, &mut ws)
}

/// Like [`sample_rtuple_of`] but records the tested edge sets.
pub fn sample_rtuple_of_verified<R: Rng + ?Sized>(
    g: &Graph,
    rumor: &NodeSet,
    v: NodeId,
    rng: &mut R,
) -> Result<RTuple> {
    check_rumor(g, rumor)?;
    let mut ws = TupleWorkspace::new(g.node_count());
    grow_rtuple(g, rumor, v, &mut RandomCoin(rng), true, &mut ws)
}

/// The tuple of `v` determined by a fixed realization.
pub fn rtuple_from_realization(
    r: &crate::diffusion::Realization<'_>,
    rumor: &NodeSet,
    v: NodeId,
) -> Result<RTuple> {
    let g = r.graph();
    check_rumor(g, rumor)?;
    let mut ws = TupleWorkspace::new(g.node_count());
    grow_rtuple(g, rumor, v, &mut { r }, false, &mut ws)
}

/// A random R-tuple with a uniformly drawn root.
pub fn sample_rtuple<R: Rng + ?Sized>(g: &Graph, rumor: &NodeSet, rng: &mut R) -> Result<RTuple> {
    check_rumor(g, rumor)?;
    let mut ws = TupleWorkspace::new(g.node_count());
    sample_with(g, rumor, rng, &mut ws)
}

fn sample_with<R: Rng + ?Sized>(
    g: &Graph,
    rumor: &NodeSet,
    rng: &mut R,
    ws: &mut TupleWorkspace,
) -> Result<RTuple> {
    let root = rng.random_range(0..g.node_count() as NodeId);
    grow_rtuple(g, rumor, root, &mut RandomCoin(rng), false, ws)
}

/// `x(S, T)`: 1 iff `S` meets `V*` or no rumor seed was reached.
pub fn x_indicator(s: &NodeSet, t: &RTuple) -> u8 {
    (!t.b || t.v_star.iter().any(|&v| s.contains(v))) as u8
}

/// An ordered collection of R-tuples with a node → tuple index over the
/// tuples that reached a rumor seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    n: usize,
    roots: Vec<NodeId>,
    b: Vec<bool>,
    offsets: Vec<usize>,
    nodes: Vec<NodeId>,
    count_b0: usize,
    inverted: Vec<Vec<u32>>,
    edges_tested: u64,
}

/// Borrowed view of one stored tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleRef<'a> {
    pub root: NodeId,
    pub v_star: &'a [NodeId],
    pub b: bool,
}

const GEN_BATCH: usize = 512;

impl SampleSet {
    pub fn new(n: usize) -> Self {
        SampleSet {
            n,
            roots: Vec::new(),
            b: Vec::new(),
            offsets: vec![0],
            nodes: Vec::new(),
            count_b0: 0,
            inverted: vec![Vec::new(); n],
            edges_tested: 0,
        }
    }

    pub fn from_tuples(n: usize, tuples: impl IntoIterator<Item = RTuple>) -> Result<Self> {
        let mut set = SampleSet::new(n);
        for t in tuples {
            set.push(t)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, t: RTuple) -> Result<()> {
        if let Some(&v) = t
            .v_star
            .iter()
            .chain([&t.root])
            .find(|&&v| v as usize >= self.n)
        {
            return Err(Error::NodeOutOfRange {
                node: v as usize,
                n: self.n,
            });
        }
        if !t.v_star.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param(
                "tuple node list must be sorted and duplicate-free",
            ));
        }
        let idx = self.roots.len();
        if idx >= u32::MAX as usize {
            return Err(Error::GuardExceeded {
                what: "sample set size",
                actual: idx + 1,
                limit: u32::MAX as usize,
            });
        }
        if t.b {
            for &v in &t.v_star {
                self.inverted[v as usize].push(idx as u32);
            }
        } else {
            self.count_b0 += 1;
        }
        self.roots.push(t.root);
        self.b.push(t.b);
        self.nodes.extend_from_slice(&t.v_star);
        self.offsets.push(self.nodes.len());
        self.edges_tested += t.edges_tested as u64;
        Ok(())
    }

    /// Draws `count` fresh tuples; tuple `i` of the set uses stream
    /// `(master_seed, domain, i)`.
    pub fn generate(
        g: &Graph,
        rumor: &NodeSet,
        count: usize,
        master_seed: u64,
        domain: u64,
    ) -> Result<Self> {
        let mut set = SampleSet::new(g.node_count());
        set.extend_to(g, rumor, count, master_seed, domain)?;
        Ok(set)
    }

    /// Grows the set to `target` tuples, continuing the stream numbering so
    /// the result equals a single [`SampleSet::generate`] of `target`.
    pub fn extend_to(
        &mut self,
        g: &Graph,
        rumor: &NodeSet,
        target: usize,
        master_seed: u64,
        domain: u64,
    ) -> Result<()> {
        check_rumor(g, rumor)?;
        if g.node_count() != self.n {
            return Err(Error::param("sample set and graph disagree on node count"));
        }
        let start = self.len();
        if target <= start {
            return Ok(());
        }
        let n = self.n;
        let batches: Vec<(usize, usize)> = (start..target)
            .step_by(GEN_BATCH)
            .map(|b| (b, (b + GEN_BATCH).min(target)))
            .collect();
        let generated: Vec<Vec<RTuple>> = batches
            .into_par_iter()
            .map_init(
                || TupleWorkspace::new(n),
                |ws, (lo, hi)| {
                    (lo..hi)
                        .map(|i| {
                            let mut rng = rng::stream(master_seed, domain, i as u64);
                            sample_with(g, rumor, &mut rng, ws)
                        })
                        .collect::<Result<Vec<_>>>()
                },
            )
            .collect::<Result<Vec<_>>>()?;
        for t in generated.into_iter().flatten() {
            self.push(t)?;
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn count_b0(&self) -> usize {
        self.count_b0
    }

    pub fn edges_tested(&self) -> u64 {
        self.edges_tested
    }

    pub fn tuple(&self, i: usize) -> TupleRef<'_> {
        TupleRef {
            root: self.roots[i],
            v_star: &self.nodes[self.offsets[i]..self.offsets[i + 1]],
            b: self.b[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TupleRef<'_>> + '_ {
        (0..self.len()).map(|i| self.tuple(i))
    }

    /// Indices of the `b = true` tuples whose `V*` contains `v`; sorted.
    pub fn tuples_containing(&self, v: NodeId) -> &[u32] {
        &self.inverted[v as usize]
    }

    /// Tuples that reached a rumor seed with an empty `V*`; no seed set can
    /// cover them.
    pub fn uncoverable(&self) -> usize {
        self.iter().filter(|t| t.b && t.v_star.is_empty()).count()
    }

    /// `F(S, R)`: the number of tuples `S` covers.
    pub fn coverage(&self, s: &NodeSet) -> usize {
        let mut hit = vec![false; self.len()];
        let mut covered = self.count_b0;
        for &v in s.as_slice() {
            if v as usize >= self.n {
                continue;
            }
            for &i in &self.inverted[v as usize] {
                let slot = &mut hit[i as usize];
                if !*slot {
                    *slot = true;
                    covered += 1;
                }
            }
        }
        covered
    }

    /// `n · F(S, R) / l`, the estimate of `f(S)`, with its standard error.
    pub fn estimate(&self, s: &NodeSet) -> crate::diffusion::Estimate {
        let l = self.len().max(1) as f64;
        let frac = self.coverage(s) as f64 / l;
        let n = self.n as f64;
        crate::diffusion::Estimate {
            mean: n * frac,
            stderr: n * (frac * (1.0 - frac) / l).sqrt(),
            samples: self.len(),
        }
    }
}

fn put_varint<W: Write>(w: &mut W, mut v: u64) -> io::Result<()> {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn get_varint<R: Read>(r: &mut R) -> Result<u64> {
    let mut out = 0u64;
    for shift in (0..64).step_by(7) {
        let mut byte = [0u8];
        r.read_exact(&mut byte)?;
        out |= u64::from(byte[0] & 0x7f) << shift;
        if byte[0] & 0x80 == 0 {
            return Ok(out);
        }
    }
    Err(Error::Cache("varint longer than 10 bytes".into()))
}

/// Binary cache format, version 1. All integers are LEB128 varints unless
/// noted.
///
/// ```text
/// magic    "RTSS"            4 bytes
/// version  1                 u16 little-endian
/// seed     master seed       u64 little-endian
/// domain   stream domain     u64 little-endian
/// n, l, count_b0
/// l times: root, b (one byte, 0 or 1), |V*|, first node, deltas...
/// ```
pub mod cache {
    use super::*;

    pub const MAGIC: &[u8; 4] = b"RTSS";
    pub const VERSION: u16 = 1;

    /// Provenance of a cached set.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct CacheKey {
        pub master_seed: u64,
        pub domain: u64,
    }

    pub fn write<W: Write>(set: &SampleSet, key: CacheKey, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&key.master_seed.to_le_bytes())?;
        w.write_all(&key.domain.to_le_bytes())?;
        put_varint(&mut w, set.n as u64)?;
        put_varint(&mut w, set.len() as u64)?;
        put_varint(&mut w, set.count_b0 as u64)?;
        for t in set.iter() {
            put_varint(&mut w, t.root as u64)?;
            w.write_all(&[t.b as u8])?;
            put_varint(&mut w, t.v_star.len() as u64)?;
            let mut prev = 0u64;
            for (i, &v) in t.v_star.iter().enumerate() {
                let v = v as u64;
                put_varint(&mut w, if i == 0 { v } else { v - prev })?;
                prev = v;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<(SampleSet, CacheKey)> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut buf2 = [0u8; 2];
        r.read_exact(&mut buf2)?;
        let version = u16::from_le_bytes(buf2);
        if version != VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let master_seed = u64::from_le_bytes(buf8);
        r.read_exact(&mut buf8)?;
        let domain = u64::from_le_bytes(buf8);
        let n = get_varint(&mut r)? as usize;
        let l = get_varint(&mut r)? as usize;
        let count_b0 = get_varint(&mut r)? as usize;
        let mut set = SampleSet::new(n);
        for _ in 0..l {
            let root = get_varint(&mut r)?;
            let mut b = [0u8];
            r.read_exact(&mut b)?;
            if b[0] > 1 {
                return Err(Error::Cache("bad flag byte".into()));
            }
            let len = get_varint(&mut r)? as usize;
            if len > n {
                return Err(Error::Cache("tuple longer than node count".into()));
            }
            let mut v_star = Vec::with_capacity(len);
            let mut prev = 0u64;
            for i in 0..len {
                let d = get_varint(&mut r)?;
                if i > 0 && d == 0 {
                    return Err(Error::Cache("non-increasing node list".into()));
                }
                prev = if i == 0 { d } else { prev + d };
                if prev >= n as u64 {
                    return Err(Error::Cache("node out of range".into()));
                }
                v_star.push(prev as NodeId);
            }
            if root >= n as u64 {
                return Err(Error::Cache("root out of range".into()));
            }
            set.push(RTuple {
                root: root as NodeId,
                v_star,
                b: b[0] == 1,
                e_t: None,
                e_f: None,
                edges_tested: 0,
            })?;
        }
        if set.count_b0 != count_b0 {
            return Err(Error::Cache("count_b0 does not match the tuples".into()));
        }
        Ok((
            set,
            CacheKey {
                master_seed,
                domain,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{diffuse_on_realization, exact_f, sample_realization};
    use crate::rng::stream;
    use crate::testutil::random_graph;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashMap;

    fn set(n: usize, v: &[NodeId]) -> NodeSet {
        NodeSet::new(n, v.iter().copied()).unwrap()
    }

    fn tuple(root: NodeId, v_star: &[NodeId], b: bool) -> RTuple {
        RTuple {
            root,
            v_star: v_star.to_vec(),
            b,
            e_t: None,
            e_f: None,
            edges_tested: 0,
        }
    }

    #[test]
    fn root_in_rumor_seeds() {
        let g = Graph::from_edge_list(3, &[(1, 0, 1.0)]).unwrap();
        let t = sample_rtuple_of(&g, &set(3, &[0]), 0, &mut stream(1, 0, 0)).unwrap();
        assert!(t.b && t.v_star.is_empty());
    }

    #[test]
    fn isolated_root() {
        let g = Graph::from_edge_list(3, &[(0, 1, 1.0)]).unwrap();
        let t = sample_rtuple_of(&g, &set(3, &[0]), 2, &mut stream(1, 0, 0)).unwrap();
        assert!(!t.b);
        assert_eq!(t.v_star, vec![2]);
    }

    #[test]
    fn chain_excludes_rumor_seed() {
        // r=0 -> a=1 -> v=2
        let g = Graph::from_edge_list(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let t = sample_rtuple_of(&g, &set(3, &[0]), 2, &mut stream(1, 0, 0)).unwrap();
        assert!(t.b);
        assert_eq!(t.v_star, vec![1, 2]);
    }

    #[test]
    fn frontier_with_rumor_seed_is_dropped_whole() {
        // 0 (rumor) -> 2 and 1 -> 2: both at distance 1, neither enters V*
        let g = Graph::from_edge_list(3, &[(0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let t = sample_rtuple_of_verified(&g, &set(3, &[0]), 2, &mut stream(1, 0, 0)).unwrap();
        assert!(t.b);
        assert_eq!(t.v_star, vec![2]);
        assert_eq!(t.e_t.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn out_of_range_root() {
        let g = Graph::from_edge_list(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            sample_rtuple_of(&g, &set(3, &[0]), 3, &mut stream(1, 0, 0)),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(sample_rtuple_of(&g, &NodeSet::empty(3), 1, &mut stream(1, 0, 0)).is_err());
    }

    #[test]
    fn single_node_graph_is_all_rumor() {
        let g = Graph::from_edge_list(1, &[]).unwrap();
        let mut rng = stream(2, 0, 0);
        for _ in 0..10 {
            let t = sample_rtuple(&g, &set(1, &[0]), &mut rng).unwrap();
            assert!(t.b && t.v_star.is_empty());
        }
    }

    #[test]
    fn no_spread_tuples_are_singletons() {
        let g = Graph::from_edge_list(4, &[(0, 1, 0.0), (1, 2, 0.0), (2, 3, 0.0)]).unwrap();
        let mut rng = stream(3, 0, 0);
        for _ in 0..100 {
            let t = sample_rtuple(&g, &set(4, &[0]), &mut rng).unwrap();
            if t.root != 0 {
                assert!(!t.b);
                assert_eq!(t.v_star, vec![t.root]);
            }
        }
    }

    #[test]
    fn roots_are_uniform() {
        let g = Graph::from_edge_list(5, &[(0, 1, 0.5)]).unwrap();
        let rumor = set(5, &[0]);
        let trials = 100_000;
        let set = SampleSet::generate(&g, &rumor, trials, 4, rng::domain::EVALUATION).unwrap();
        let mut counts = [0usize; 5];
        for t in set.iter() {
            counts[t.root as usize] += 1;
        }
        // 4.5 sigma per cell for a multinomial with p = 1/5
        let sd = (trials as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!(
                (c as f64 - trials as f64 / 5.0).abs() <= 4.5 * sd,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn indicator_cases() {
        let s = set(3, &[0]);
        assert_eq!(x_indicator(&s, &tuple(1, &[1, 2], false)), 1);
        assert_eq!(x_indicator(&NodeSet::empty(3), &tuple(1, &[1, 2], true)), 0);
        assert_eq!(x_indicator(&s, &tuple(1, &[0, 1], true)), 1);
        assert_eq!(x_indicator(&s, &tuple(1, &[1, 2], true)), 0);
    }

    #[test]
    fn coverage_edge_cases() {
        let tuples = vec![
            tuple(0, &[0, 1], true),
            tuple(2, &[2], false),
            tuple(3, &[], true),
            tuple(1, &[1], true),
        ];
        let r = SampleSet::from_tuples(4, tuples).unwrap();
        assert_eq!(r.coverage(&NodeSet::empty(4)), r.count_b0());
        assert_eq!(r.coverage(&set(4, &[0, 1, 2, 3])), r.len() - 1);
        assert_eq!(r.uncoverable(), 1);
        assert_eq!(r.coverage(&set(4, &[1])), 3);
        assert_eq!(r.tuples_containing(1), &[0, 3]);
    }

    #[test]
    fn push_rejects_malformed_tuples() {
        let mut r = SampleSet::new(3);
        assert!(r.push(tuple(0, &[2, 1], true)).is_err());
        assert!(r.push(tuple(0, &[3], true)).is_err());
        assert!(r.push(tuple(5, &[], true)).is_err());
    }

    fn arb_sample_set() -> impl Strategy<Value = (SampleSet, Vec<RTuple>, NodeSet)> {
        (1usize..12).prop_flat_map(|n| {
            let t = (
                0..n as NodeId,
                proptest::collection::btree_set(0..n as NodeId, 0..n),
                any::<bool>(),
            );
            (
                proptest::collection::vec(t, 0..40),
                proptest::collection::btree_set(0..n as NodeId, 0..n),
            )
                .prop_map(move |(raw, s)| {
                    let tuples: Vec<RTuple> = raw
                        .into_iter()
                        .map(|(root, vs, b)| tuple(root, &vs.into_iter().collect::<Vec<_>>(), b))
                        .collect();
                    let r = SampleSet::from_tuples(n, tuples.clone()).unwrap();
                    (r, tuples, NodeSet::new(n, s).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn indexed_coverage_equals_naive_sum((r, tuples, s) in arb_sample_set()) {
            let naive: usize = tuples.iter().map(|t| x_indicator(&s, t) as usize).sum();
            prop_assert_eq!(r.coverage(&s), naive);
        }

        #[test]
        fn cache_round_trip((r, _tuples, _s) in arb_sample_set(), seed in any::<u64>()) {
            let key = cache::CacheKey { master_seed: seed, domain: 9 };
            let mut buf = Vec::new();
            cache::write(&r, key, &mut buf).unwrap();
            let (back, k2) = cache::read(buf.as_slice()).unwrap();
            prop_assert_eq!(k2, key);
            prop_assert_eq!(back.len(), r.len());
            prop_assert_eq!(back.count_b0(), r.count_b0());
            for (a, b) in back.iter().zip(r.iter()) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn cache_rejects_garbage() {
        assert!(cache::read(&b"NOPE\x01\x00"[..]).is_err());
        let r = SampleSet::from_tuples(3, vec![tuple(0, &[0, 2], true)]).unwrap();
        let key = cache::CacheKey {
            master_seed: 1,
            domain: 2,
        };
        let mut buf = Vec::new();
        cache::write(&r, key, &mut buf).unwrap();
        buf[4] = 9;
        assert!(matches!(cache::read(buf.as_slice()), Err(Error::Cache(_))));
        buf[4] = 1;
        buf.truncate(buf.len() - 1);
        assert!(cache::read(buf.as_slice()).is_err());
    }

    #[test]
    fn realization_tuple_matches_forward_diffusion() {
        let mut gen = stream(5, 0, 0);
        for case in 0..300 {
            let n = 2 + case % 25;
            let g = random_graph(&mut gen, n, 3 * n);
            let r = sample_realization(&g, &mut gen);
            let nr = gen.random_range(1..=n.min(3));
            let rumor = set(n, &(0..nr as NodeId).collect::<Vec<_>>());
            let sp: Vec<NodeId> = (nr as NodeId..n as NodeId)
                .filter(|_| gen.random_bool(0.2))
                .collect();
            let positive = set(n, &sp);
            let out = diffuse_on_realization(&r, &rumor, &positive).unwrap();
            for v in 0..n as NodeId {
                let t = rtuple_from_realization(&r, &rumor, v).unwrap();
                assert_eq!(
                    x_indicator(&positive, &t) == 1,
                    out.is_saved(v),
                    "case {case} node {v}"
                );
                assert!(t.v_star.iter().all(|&u| !rumor.contains(u)));
            }
        }
    }

    #[test]
    fn verified_edges_are_disjoint_and_unique() {
        let mut gen = stream(6, 0, 0);
        for _ in 0..200 {
            let g = random_graph(&mut gen, 10, 25);
            let rumor = set(10, &[0]);
            let v = gen.random_range(0..10);
            let t = sample_rtuple_of_verified(&g, &rumor, v, &mut gen).unwrap();
            let mut all: Vec<EdgeId> = t.e_t.clone().unwrap();
            all.extend(t.e_f.clone().unwrap());
            let len = all.len();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), len);
            assert_eq!(len as u32, t.edges_tested);
        }
    }

    #[test]
    fn tuple_frequencies_match_edge_products() {
        // 6 edges with a diamond and a rumor seed two hops out
        let g = Graph::from_edge_list(
            5,
            &[
                (1, 0, 0.6),
                (2, 0, 0.3),
                (3, 1, 0.5),
                (3, 2, 0.8),
                (4, 3, 0.7),
                (4, 1, 0.2),
            ],
        )
        .unwrap();
        let rumor = set(5, &[4]);
        let trials = 200_000;
        let mut rng = stream(7, 0, 0);
        type Outcome = (Vec<EdgeId>, Vec<EdgeId>, Vec<NodeId>, bool);
        let mut freq: HashMap<Outcome, usize> = HashMap::new();
        for _ in 0..trials {
            let mut t = sample_rtuple_of_verified(&g, &rumor, 0, &mut rng).unwrap();
            let mut et = t.e_t.take().unwrap();
            let mut ef = t.e_f.take().unwrap();
            et.sort_unstable();
            ef.sort_unstable();
            *freq.entry((et, ef, t.v_star, t.b)).or_default() += 1;
        }
        let mut total_p = 0.0;
        for ((et, ef, _, _), count) in &freq {
            let p: f64 = et
                .iter()
                .map(|&e| g.edge_probability(e as usize))
                .product::<f64>()
                * ef.iter()
                    .map(|&e| 1.0 - g.edge_probability(e as usize))
                    .product::<f64>();
            total_p += p;
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*count as f64 - trials as f64 * p).abs() <= 4.5 * sd + 1.0,
                "p = {p}, count = {count}"
            );
        }
        // every possible outcome was observed and the products sum to one
        assert!((total_p - 1.0).abs() < 1e-9, "{total_p}");
    }

    #[test]
    fn tuple_mean_is_unbiased_on_tiny_graph() {
        let mut gen = stream(8, 0, 0);
        let g = random_graph(&mut gen, 7, 12);
        let rumor = set(7, &[0]);
        let s = set(7, &[3]);
        let exact = exact_f(&g, &rumor, &s).unwrap();
        let l = 100_000;
        let r = SampleSet::generate(&g, &rumor, l, 11, rng::domain::EVALUATION).unwrap();
        let mean = r.coverage(&s) as f64 / l as f64;
        assert!((mean - exact / 7.0).abs() <= 4.0 * (0.25 / l as f64).sqrt());
    }

    #[test]
    fn generation_is_worker_count_invariant_and_prefix_stable() {
        let g = crate::graph::generate_power_law(400, 6.0, 2.5, 2).unwrap();
        let g = crate::graph::reweight(&g, crate::WeightingModel::Constant(0.1)).unwrap();
        let rumor = set(400, &[0, 1, 2, 3]);
        let build = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    SampleSet::generate(&g, &rumor, 3000, 5, rng::domain::FINAL_SELECTION).unwrap()
                })
        };
        let a = build(1);
        assert_eq!(a, build(4));
        let mut grown =
            SampleSet::generate(&g, &rumor, 1000, 5, rng::domain::FINAL_SELECTION).unwrap();
        grown
            .extend_to(&g, &rumor, 3000, 5, rng::domain::FINAL_SELECTION)
            .unwrap();
        assert_eq!(a, grown);
    }

    #[test]
    fn coverage_monotone_submodular_exhaustive() {
        let mut gen = stream(9, 0, 0);
        let n = 7;
        let g = random_graph(&mut gen, n, 14);
        let r = SampleSet::generate(&g, &set(n, &[0]), 500, 3, rng::domain::EVALUATION).unwrap();
        let f = |mask: u32| {
            r.coverage(&set(
                n,
                &(0..n as NodeId)
                    .filter(|v| mask >> v & 1 == 1)
                    .collect::<Vec<_>>(),
            )) as i64
        };
        let vals: Vec<i64> = (0..1u32 << n).map(f).collect();
        for b in 0..1u32 << n {
            let mut a = b;
            loop {
                assert!(vals[a as usize] <= vals[b as usize]);
                for v in (0..n).filter(|v| b >> v & 1 == 0) {
                    assert!(
                        vals[(a | 1 << v) as usize] - vals[a as usize]
                            >= vals[(b | 1 << v) as usize] - vals[b as usize]
                    );
                }
                if a == 0 {
                    break;
                }
                a = (a - 1) & b;
            }
        }
    }
}
