//! Fixed-confidence pure-exploration bandit laboratory.
//!
//! The crate is organised around a handful of modules:
//!
//! * [`model`]: arm distributions, instances, KL divergences, gaps and permutations.
//! * [`rng`]: counter-based random streams so every sample is random-access.
//! * [`confidence`]: anytime and fixed-time confidence radii.
//! * [`algorithms`]: LUCB++, LUCB, oracle and uniform samplers, the staged
//!   known-means wrapper and algorithm symmetrization.
//! * [`bounds`]: closed-form sample-complexity lower bounds.
//! * [`simlab`]: transcripts, the swap simulator and censored-tilting checks.
//! * [`harness`]: seeded trial orchestration, reports, persistence and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod bounds;
pub mod confidence;
pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod simlab;

pub use error::{Error, Result};
