//! Stochastic simulation of the classical linear Boltzmann equation: exact
//! collision sampling, jump-process ensembles, and rate-fitting statistics.

mod ensemble;
mod kernel;
mod statistics;

pub use ensemble::{evolve_ensemble, EnsembleConfig, InitialCondition};
pub use kernel::{CollisionError, CollisionKernel};
pub use statistics::{
    fit_exponential_rate, linear_fit, log_log_slope, weighted_linear_fit, EnsembleStats,
    MomentRecord,
};
