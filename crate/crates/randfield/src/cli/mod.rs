//! Batch experiment runner: config parsing and dispatch.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use report::RunReport;
pub use run::run_experiment;
