//! Budget allocation for random-walk exploration of multi-layered networks.
//!
//! Each layer of a [`network::LayeredNetwork`] is explored by its own random
//! walker. Given a total step budget, the goal is to split it across layers so
//! that the expected total weight of distinct visited nodes is maximal.
//!
//! - [`visitprob`] computes the probability that a walker visits a node within
//!   `b` steps, which is all the solvers need.
//! - [`reward`] evaluates allocations, including an incremental evaluator.
//! - [`offline`] holds the solvers for a known network.
//! - [`online`] learns the probabilities from sampled walks with bandit algorithms
//!   and measures regret.

mod clock;
pub mod error;
pub mod network;
pub mod offline;
pub mod online;
pub mod reward;
pub mod visitprob;

pub use error::{Error, Result};
#[cfg(feature = "cli")]
pub mod cli;
