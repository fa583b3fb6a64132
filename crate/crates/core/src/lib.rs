//! Matching advice for bipartite agent-resource markets.
//!
//! Given a compatibility graph, a special agent `x*` and the restrictions
//! `x*` could drop, the crate computes the probability that `x*` is matched
//! by a uniformly random maximum matching and searches for a budget-feasible
//! set of restrictions whose removal raises that probability.

pub mod advice;
pub mod bigraph;
pub mod data;
pub mod error;
pub mod matchenum;
pub mod prob;
pub mod scenario;
pub mod solvers;

pub use error::{Error, Result};
