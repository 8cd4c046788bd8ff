//! Rumor blocking under the competitive independent cascade model.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the immutable propagation network and its loaders.
//! * [`diffusion`] runs forward competitive cascades and computes exact
//!   objective values on tiny graphs.
//! * [`rtuple`] draws reverse samples (R-tuples) and counts their coverage.
//! * [`coverage`] selects seeds by greedy maximum coverage.
//! * [`estimation`] lower-bounds the optimum before final sampling.
//! * [`rbr`] ties the phases together into the randomized blocking algorithm.
//! * [`baselines`] holds the comparison heuristics.
//! * [`strategy`] registers every seed selector under a name.
//! * [`experiment`] is the evaluation and sweep harness used by the CLI.

pub mod baselines;
pub mod coverage;
pub mod diffusion;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod graph;
pub mod rbr;
pub mod rng;
pub mod rtuple;
pub mod strategy;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, NodeSet, WeightingModel};
