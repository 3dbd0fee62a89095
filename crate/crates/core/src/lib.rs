//! Liner shipping network design toolkit: LINERLIB parsing, a greedy
//! multi-commodity flow heuristic over an expanded port/service graph, the
//! weekly profit model, a steppable network-design environment and a
//! rollout search baseline.

// Input checks are written as `!(x >= 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod env;
pub mod error;
pub mod graph;
pub mod linerlib;
pub mod mcf;
pub mod model;
pub mod perturb;
pub mod protocol;
pub mod report;
pub mod schedule;
pub mod search;
pub mod synth;
pub mod tsp;

pub use error::{Error, Result};
