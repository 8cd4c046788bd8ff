//! Statistical lower bound on `OPT_k`.
//!
//! The search walks thresholds `x_i = n / 2^i` downward. For each threshold
//! it grows one persistent sample set to `l_i = λ₃ / x_i` tuples, runs the
//! greedy selector and stops as soon as the coverage estimate clears
//! `(1 + δ) x_i`.

use crate::coverage::select_nodes;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::rng::domain;
use crate::rtuple::SampleSet;

/// `ln C(n, k)` as a sum of logs, so it never overflows.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::param(format!(
            "log_binomial: k = {k} exceeds n = {n}"
        )));
    }
    let k = k.min(n - k);
    Ok((1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum())
}

/// Result of [`estimate_opt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptEstimate {
    /// `OPT_k*`, always in `[1, n]`.
    pub opt_star: f64,
    /// Thresholds tested.
    pub iterations: usize,
    /// Size of the sample set when the search stopped.
    pub tuples_used: usize,
    /// False when every threshold failed and the fallback of 1 was used.
    pub triggered: bool,
    /// True when the next `l_i` would have exceeded the tuple guard.
    pub guard_hit: bool,
}

fn check_params(n: usize, k: usize, delta: f64, big_n: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(big_n > 0.0 && big_n.is_finite()) {
        return Err(Error::param(format!("N must be positive, got {big_n}")));
    }
    if k < 1 {
        return Err(Error::param("budget k must be at least 1"));
    }
    if k > n {
        return Err(Error::param(format!("budget k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Number of thresholds: `ceil(log2(n - 1))`, zero for `n <= 2`.
pub fn iteration_count(n: usize) -> usize {
    if n <= 2 {
        return 0;
    }
    let m = (n - 1) as u64;
    (u64::BITS - (m - 1).leading_zeros()) as usize
}

/// `λ₃ = n (2 + δ) ln(N · C(n,k) · log2 n) / δ²`, with the log taken in
/// log-space.
pub fn lambda3(n: usize, k: usize, delta: f64, big_n: f64) -> Result<f64> {
    check_params(n, k, delta, big_n)?;
    let log2n = (n as f64).log2();
    let ln_arg = big_n.ln() + log_binomial(n as u64, k as u64)? + log2n.ln();
    Ok(n as f64 * (2.0 + delta) * ln_arg.max(0.0) / (delta * delta))
}

/// The `(x_i, l_i)` pairs of the search, before rounding.
pub fn schedule(n: usize, k: usize, delta: f64, big_n: f64) -> Result<Vec<(f64, f64)>> {
    let lam = lambda3(n, k, delta, big_n)?;
    Ok((1..=iteration_count(n))
        .map(|i| {
            let x = n as f64 / 2f64.powi(i as i32);
            (x, lam / x)
        })
        .collect())
}

/// Searches for `OPT_k*` with tuples from the `OPT_ESTIMATION` stream
/// domain. Returns the estimate together with the sample set it grew.
///
/// If some `l_i` exceeds `max_tuples` the search stops there with the
/// fallback value and `guard_hit` set.
pub fn estimate_opt(
    g: &Graph,
    rumor: &NodeSet,
    k: usize,
    delta: f64,
    big_n: f64,
    master_seed: u64,
    max_tuples: usize,
) -> Result<(OptEstimate, SampleSet)> {
    let n = g.node_count();
    let steps = schedule(n, k, delta, big_n)?;
    let mut set = SampleSet::new(n);
    let mut out = OptEstimate {
        opt_star: 1.0,
        iterations: 0,
        tuples_used: 0,
        triggered: false,
        guard_hit: false,
    };
    for (x, l) in steps {
        let target = (l.ceil() as usize).max(1);
        if target > max_tuples {
            out.guard_hit = true;
            break;
        }
        set.extend_to(g, rumor, target, master_seed, domain::OPT_ESTIMATION)?;
        out.iterations += 1;
        let sel = select_nodes(&set, k, rumor)?;
        let est = n as f64 * sel.covered as f64 / set.len() as f64;
        if est >= (1.0 + delta) * x {
            out.opt_star = (est / (1.0 + delta)).clamp(1.0, n as f64);
            out.triggered = true;
            break;
        }
    }
    out.tuples_used = set.len();
    Ok((out, set))
}
