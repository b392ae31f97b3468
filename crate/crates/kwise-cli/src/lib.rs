//! Simulation workbench CLI: configured experiment pipelines over the
//! `kwise` library, with deterministic seeded reports in JSON or CSV.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentParams, OutputFormat};
pub use report::{Check, Payload, Report, Results};
pub use runner::run_experiment;
