//! Interactive multi-objective Bayesian optimization with soft and hard
//! bounds on each objective.

pub mod config;
pub mod error;
pub mod gp;
pub mod metrics;
pub mod par;
pub mod preference;
pub mod problem;
pub mod query;
pub mod rng;
pub mod sensitivity;
pub mod session;
pub mod shf;
pub mod simulator;
pub mod sobol;

pub use error::{Error, Result};
