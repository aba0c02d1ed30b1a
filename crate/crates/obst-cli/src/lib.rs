//! Library surface of the experiment runner, so integration tests can drive
//! scenarios directly.

pub mod config;
pub mod scenario;

pub use config::{CliError, ExperimentConfig};
pub use scenario::{compute_bounds, run_scenario, RunArtifacts};
