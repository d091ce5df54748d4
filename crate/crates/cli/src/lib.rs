//! Experiment driver for the creole masked-LM pipeline.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod sweep;

pub use config::{validate_config, ExperimentConfig};
pub use pipeline::{run_experiment, run_experiment_config, RunError};
pub use sweep::{run_sweep, SweepAxis};
