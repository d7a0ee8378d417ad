//! Maximum-throughput routing for k-of-n testing on parallel processors.
//!
//! Each item must be classified by whether it fails at least `k` of `n`
//! independent tests; test `i` passes with probability `p_i` and runs on a
//! processor that handles at most `r_i` items per unit time. A routing
//! spreads the item stream over testing strategies so that no processor is
//! overloaded, and the goal is to maximize the stream's rate.
//!
//! - [`equalize`] solves the conservative variant exactly.
//! - [`smt`] solves the standard variant by cutting planes over [`lp`].
//! - [`mincost`] holds the cheapest-strategy solvers.
//! - [`routing`] evaluates, certifies and simulates routings.

pub mod cli;
pub mod equalize;
pub mod error;
pub mod heap;
pub mod instance;
pub mod lp;
pub mod mincost;
pub mod num;
pub mod prob;
pub mod routing;
pub mod smt;

pub use error::{KofnError, Result};
pub use instance::{CostInstance, Instance};
pub use num::Q;
