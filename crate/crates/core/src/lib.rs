//! Exact and Monte Carlo laboratory for recurrent random walks in random
//! environment on the integers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod env;
pub mod error;
pub mod expcli;
pub mod landscape;
pub mod montecarlo;
pub mod rng;

pub use env::{make_env, EnvSpec, Environment, FixedEnv, Law, Medium, Site};
pub use error::{Error, Result};
