//! The full reverse-sampling blocker: estimate `OPT_k*`, size the final
//! sample, draw it fresh and pick seeds by greedy coverage.

use std::fmt::Write as _;
use std::time::Instant;

use crate::coverage::select_nodes;
use crate::error::{Error, Result};
use crate::estimation::{estimate_opt, log_binomial};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::rng::domain;
use crate::rtuple::SampleSet;

const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// Grid resolution for [`choose_delta1`].
pub const DELTA1_GRID: usize = 1000;

/// Default cap on tuples held in memory at once.
pub const DEFAULT_MAX_TUPLES: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbrParams {
    pub k: usize,
    /// `None` picks the value minimizing `l*`.
    pub delta1: Option<f64>,
    pub delta2: f64,
    pub delta3: f64,
    /// `None` means `N = n`.
    pub big_n: Option<f64>,
    pub max_tuples: usize,
}

impl Default for RbrParams {
    fn default() -> Self {
        RbrParams {
            k: 20,
            delta1: None,
            delta2: 0.1,
            delta3: 0.1,
            big_n: None,
            max_tuples: DEFAULT_MAX_TUPLES,
        }
    }
}

fn in_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in (0, 1), got {x}")))
    }
}

impl RbrParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::param("budget k must be at least 1"));
        }
        in_unit("delta2", self.delta2)?;
        in_unit("delta3", self.delta3)?;
        if let Some(d1) = self.delta1 {
            in_unit("delta1", d1)?;
            if self.delta2 <= ONE_MINUS_INV_E * d1 {
                return Err(Error::param(format!(
                    "delta2 = {} must exceed (1 - 1/e) * delta1 = {}",
                    self.delta2,
                    ONE_MINUS_INV_E * d1
                )));
            }
        }
        if let Some(n) = self.big_n {
            if !(n >= 1.0 && n.is_finite()) {
                return Err(Error::param(format!("N must be at least 1, got {n}")));
            }
        }
        if self.max_tuples == 0 {
            return Err(Error::param("max_tuples must be positive"));
        }
        Ok(())
    }
}

/// `(l1, l2)` before rounding.
pub fn sample_size_bounds(
    n: usize,
    k: usize,
    delta1: f64,
    delta2: f64,
    big_n: f64,
    opt_star: f64,
) -> Result<(f64, f64)> {
    in_unit("delta1", delta1)?;
    in_unit("delta2", delta2)?;
    let delta_star = delta2 - ONE_MINUS_INV_E * delta1;
    if delta_star <= 0.0 {
        return Err(Error::param(format!(
            "infeasible pair: delta2 = {delta2} <= (1 - 1/e) * delta1 = {}",
            ONE_MINUS_INV_E * delta1
        )));
    }
    if opt_star.is_nan() || opt_star < 1.0 {
        return Err(Error::param(format!(
            "OPT* must be at least 1, got {opt_star}"
        )));
    }
    if !(big_n >= 1.0 && big_n.is_finite()) {
        return Err(Error::param(format!("N must be at least 1, got {big_n}")));
    }
    let n_f = n as f64;
    let l1 = 2.0 * n_f * big_n.ln() / (delta1 * delta1 * opt_star);
    let l2 = (2.0 + delta_star) * n_f * (big_n.ln() + log_binomial(n as u64, k as u64)?)
        / (delta_star * delta_star * opt_star);
    Ok((l1, l2))
}

/// `(l1, l2, l*)` rounded up.
pub fn sample_sizes(
    n: usize,
    k: usize,
    delta1: f64,
    delta2: f64,
    big_n: f64,
    opt_star: f64,
) -> Result<(usize, usize, usize)> {
    let (l1, l2) = sample_size_bounds(n, k, delta1, delta2, big_n, opt_star)?;
    let (l1, l2) = (l1.ceil() as usize, l2.ceil() as usize);
    Ok((l1, l2, l1.max(l2)))
}

/// The `δ₁` minimizing `max(l1, l2)` for the given `δ₂`.
///
/// `OPT*` scales both terms alike, so it is held at 1. The search takes the
/// best point of a uniform grid over the feasible interval and then polishes
/// it by golden-section search between the neighbouring grid points; the
/// objective is unimodal because `l1` falls and `l2` rises in `δ₁`.
pub fn choose_delta1(delta2: f64, n: usize, k: usize, big_n: f64) -> Result<f64> {
    in_unit("delta2", delta2)?;
    let upper = (delta2 / ONE_MINUS_INV_E).min(1.0);
    let objective = |d1: f64| -> Result<f64> {
        let (a, b) = sample_size_bounds(n, k, d1, delta2, big_n, 1.0)?;
        Ok(a.max(b))
    };
    let step = upper / DELTA1_GRID as f64;
    let point = |j: usize| (j as f64 + 0.5) * step;
    let mut best = (f64::INFINITY, 0);
    for j in 0..DELTA1_GRID {
        let v = objective(point(j))?;
        if v < best.0 {
            best = (v, j);
        }
    }
    let (mut lo, mut hi) = (
        if best.1 == 0 {
            point(0)
        } else {
            point(best.1 - 1)
        },
        if best.1 + 1 == DELTA1_GRID {
            point(best.1)
        } else {
            point(best.1 + 1)
        },
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if objective(a)? <= objective(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    let polished = 0.5 * (lo + hi);
    Ok(if objective(polished)? <= best.0 {
        polished
    } else {
        point(best.1)
    })
}

/// Everything a run produced, for printing and CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct RbrReport {
    pub n: usize,
    pub k: usize,
    pub big_n: f64,
    pub delta1_used: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub opt_star: f64,
    pub opt_triggered: bool,
    pub opt_iterations: usize,
    pub opt_tuples: usize,
    pub l1: usize,
    pub l2: usize,
    pub l_star: usize,
    /// Tuples actually drawn for selection; below `l_star` only when clamped.
    pub l_used: usize,
    pub clamped: bool,
    pub seeds: Vec<NodeId>,
    pub gains: Vec<usize>,
    /// `n · F(S*, R) / l` on the selection sample.
    pub coverage_estimate: f64,
    pub tuples_total: usize,
    pub edges_tested: u64,
    pub estimation_ms: f64,
    pub selection_ms: f64,
}

impl RbrReport {
    /// True when any tuple guard cut the run short.
    pub fn guard_tripped(&self) -> bool {
        self.clamped
    }

    pub fn total_ms(&self) -> f64 {
        self.estimation_ms + self.selection_ms
    }

    /// Flat `key=value` block. Seeds are printed through `label`.
    pub fn to_key_values(&self, label: impl Fn(NodeId) -> u64, timings: bool) -> String {
        let mut s = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(|&v| label(v).to_string()).collect();
        let gains: Vec<String> = self.gains.iter().map(|g| g.to_string()).collect();
        let ms = |x: f64| if timings { x } else { 0.0 };
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "N={}", self.big_n);
        let _ = writeln!(s, "delta1={:.6}", self.delta1_used);
        let _ = writeln!(s, "delta2={}", self.delta2);
        let _ = writeln!(s, "delta3={}", self.delta3);
        let _ = writeln!(s, "opt_star={:.6}", self.opt_star);
        let _ = writeln!(s, "opt_triggered={}", self.opt_triggered);
        let _ = writeln!(s, "opt_iterations={}", self.opt_iterations);
        let _ = writeln!(s, "opt_tuples={}", self.opt_tuples);
        let _ = writeln!(s, "l1={}", self.l1);
        let _ = writeln!(s, "l2={}", self.l2);
        let _ = writeln!(s, "l_star={}", self.l_star);
        let _ = writeln!(s, "l_used={}", self.l_used);
        let _ = writeln!(s, "clamped={}", self.clamped);
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        let _ = writeln!(s, "gains={}", gains.join(","));
        let _ = writeln!(s, "coverage_estimate={:.6}", self.coverage_estimate);
        let _ = writeln!(s, "tuples_total={}", self.tuples_total);
        let _ = writeln!(s, "edges_tested={}", self.edges_tested);
        let _ = writeln!(s, "estimation_ms={:.3}", ms(self.estimation_ms));
        let _ = writeln!(s, "selection_ms={:.3}", ms(self.selection_ms));
        s
    }
}

fn resolve(g: &Graph, rumor: &NodeSet, params: &RbrParams) -> Result<(usize, f64)> {
    params.validate()?;
    let n = g.node_count();
    if rumor.universe() != n || rumor.is_empty() {
        return Err(Error::param(
            "rumor seed set must be nonempty and match the graph",
        ));
    }
    if rumor.len() >= n {
        return Err(Error::param("every node is a rumor seed"));
    }
    Ok((
        params.k.min(n - rumor.len()),
        params.big_n.unwrap_or(n as f64),
    ))
}

/// Runs the whole pipeline. Tuple `i` of the estimation phase and of the
/// final phase come from disjoint stream domains, so the final sample is
/// independent of the estimate.
///
/// An `l*` above `max_tuples` is clamped and flagged in the report.
pub fn run_rbr(
    g: &Graph,
    rumor: &NodeSet,
    params: &RbrParams,
    master_seed: u64,
) -> Result<RbrReport> {
    let (k, big_n) = resolve(g, rumor, params)?;
    let n = g.node_count();

    let started = Instant::now();
    let (opt, est_set) = estimate_opt(
        g,
        rumor,
        k,
        params.delta3,
        big_n,
        master_seed,
        params.max_tuples,
    )?;
    let delta1 = match params.delta1 {
        Some(d) => d,
        None => choose_delta1(params.delta2, n, k, big_n)?,
    };
    let (l1, l2, l_star) = sample_sizes(n, k, delta1, params.delta2, big_n, opt.opt_star)?;
    let est_edges = est_set.edges_tested();
    drop(est_set);
    let estimation_ms = started.elapsed().as_secs_f64() * 1e3;

    let l_used = l_star.clamp(1, params.max_tuples);
    let clamped = opt.guard_hit || l_star > params.max_tuples;

    let started = Instant::now();
    let (sel, set) = final_phase(g, rumor, k, l_used, master_seed)?;
    let selection_ms = started.elapsed().as_secs_f64() * 1e3;

    Ok(RbrReport {
        n,
        k,
        big_n,
        delta1_used: delta1,
        delta2: params.delta2,
        delta3: params.delta3,
        opt_star: opt.opt_star,
        opt_triggered: opt.triggered,
        opt_iterations: opt.iterations,
        opt_tuples: opt.tuples_used,
        l1,
        l2,
        l_star,
        l_used,
        clamped,
        coverage_estimate: n as f64 * sel.covered as f64 / set.len() as f64,
        seeds: sel.seeds,
        gains: sel.gains,
        tuples_total: opt.tuples_used + set.len(),
        edges_tested: est_edges + set.edges_tested(),
        estimation_ms,
        selection_ms,
    })
}

/// Selection with an explicit tuple count, skipping the estimation phase.
pub fn run_with_budget(
    g: &Graph,
    rumor: &NodeSet,
    k: usize,
    l_star: usize,
    master_seed: u64,
) -> Result<RbrReport> {
    let params = RbrParams {
        k,
        ..RbrParams::default()
    };
    let (k, big_n) = resolve(g, rumor, &params)?;
    if l_star == 0 {
        return Err(Error::param("tuple budget must be positive"));
    }
    let n = g.node_count();
    let started = Instant::now();
    let (sel, set) = final_phase(g, rumor, k, l_star, master_seed)?;
    let selection_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(RbrReport {
        n,
        k,
        big_n,
        delta1_used: 0.0,
        delta2: 0.0,
        delta3: 0.0,
        opt_star: 0.0,
        opt_triggered: false,
        opt_iterations: 0,
        opt_tuples: 0,
        l1: 0,
        l2: 0,
        l_star,
        l_used: l_star,
        clamped: false,
        coverage_estimate: n as f64 * sel.covered as f64 / set.len() as f64,
        seeds: sel.seeds,
        gains: sel.gains,
        tuples_total: set.len(),
        edges_tested: set.edges_tested(),
        estimation_ms: 0.0,
        selection_ms,
    })
}

fn final_phase(
    g: &Graph,
    rumor: &NodeSet,
    k: usize,
    l: usize,
    master_seed: u64,
) -> Result<(crate::coverage::SelectionResult, SampleSet)> {
    let set = SampleSet::generate(g, rumor, l, master_seed, domain::FINAL_SELECTION)?;
    let sel = select_nodes(&set, k, rumor)?;
    Ok((sel, set))
}
