//! Seed selectors behind one trait, looked up by name at runtime.

use crate::baselines::{greedy_mc, proximity, random_seeds};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::rbr::{run_rbr, RbrParams, RbrReport};

/// Inputs shared by every selector.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub graph: &'a Graph,
    pub rumor: &'a NodeSet,
    pub k: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub seeds: Vec<NodeId>,
    /// Tuples drawn while selecting; zero for selectors that draw none.
    pub tuples_used: usize,
    /// Present for the tuple-based selector.
    pub report: Option<RbrReport>,
}

impl Selection {
    fn plain(seeds: Vec<NodeId>) -> Self {
        Selection {
            seeds,
            tuples_used: 0,
            report: None,
        }
    }
}

pub trait SeedSelector: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, ctx: &SelectionContext<'_>) -> Result<Selection>;
}

/// Tunables for the registered selectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoOptions {
    /// `k` is taken from the context; the rest is used as given.
    pub rbr: RbrParams,
    pub greedy_sims: usize,
}

impl Default for AlgoOptions {
    fn default() -> Self {
        AlgoOptions {
            rbr: RbrParams::default(),
            greedy_sims: 2000,
        }
    }
}

struct Rbr(RbrParams);
struct GreedyMc(usize);
struct Proximity;
struct RandomPick;
struct Unblocking;

impl SeedSelector for Rbr {
    fn name(&self) -> &'static str {
        "rbr"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<Selection> {
        let params = RbrParams { k: ctx.k, ..self.0 };
        let rep = run_rbr(ctx.graph, ctx.rumor, &params, ctx.master_seed)?;
        Ok(Selection {
            seeds: rep.seeds.clone(),
            tuples_used: rep.tuples_total,
            report: Some(rep),
        })
    }
}

impl SeedSelector for GreedyMc {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<Selection> {
        greedy_mc(ctx.graph, ctx.rumor, ctx.k, self.0, ctx.master_seed).map(Selection::plain)
    }
}

impl SeedSelector for Proximity {
    fn name(&self) -> &'static str {
        "proximity"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<Selection> {
        proximity(ctx.graph, ctx.rumor, ctx.k).map(Selection::plain)
    }
}

impl SeedSelector for RandomPick {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<Selection> {
        random_seeds(ctx.graph, ctx.rumor, ctx.k, ctx.master_seed).map(Selection::plain)
    }
}

impl SeedSelector for Unblocking {
    fn name(&self) -> &'static str {
        "unblocking"
    }

    fn select(&self, _ctx: &SelectionContext<'_>) -> Result<Selection> {
        Ok(Selection::plain(Vec::new()))
    }
}

type Factory = fn(&AlgoOptions) -> Box<dyn SeedSelector>;

/// Name to selector table.
pub struct Registry {
    entries: Vec<(&'static str, Factory)>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            entries: Vec::new(),
        };
        r.register("rbr", |o| Box::new(Rbr(o.rbr)));
        r.register("greedy", |o| Box::new(GreedyMc(o.greedy_sims)));
        r.register("greedy-mc", |o| Box::new(GreedyMc(o.greedy_sims)));
        r.register("proximity", |_| Box::new(Proximity));
        r.register("random", |_| Box::new(RandomPick));
        r.register("unblocking", |_| Box::new(Unblocking));
        r
    }
}

impl Registry {
    /// Adds or replaces an entry.
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = factory,
            None => self.entries.push((name, factory)),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn create(&self, name: &str, opts: &AlgoOptions) -> Result<Box<dyn SeedSelector>> {
        if opts.greedy_sims == 0 {
            return Err(Error::param("greedy simulations must be at least 1"));
        }
        let lower = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|(n, _)| *n == lower)
            .map(|(_, f)| f(opts))
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
    }
}
