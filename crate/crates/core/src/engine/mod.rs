//! Exact quenched computations for one walk in a fixed environment.

pub mod bounds;
pub mod chain;
pub mod exact;
pub mod measure;

pub use chain::{build_chain, evolve, BoundaryMode, DistVector, WindowChain};
pub use exact::{
    distribution, escape_prob, expected_exit, first_visit_bound_check, first_visit_prob,
    hitting_prob, hitting_prob_oracle, hitting_tail, log_checkpoints, point_prob, point_series,
    return_prob_series, return_probabilities, series_from, Bounded, WINDOW_CAP,
};
pub use measure::{log_mu, log_mu_hat, mu, reflected_nu, EvenMeasure};
