//! Experiment runner for the randomly-weighted-average checks in `rwa-core`.
//!
//! A JSON [`ExperimentConfig`] lists scenarios; [`run`] executes them and writes one
//! [`VerificationReport`] per scenario, plus CSV data where a scenario produces any.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod scenarios;

pub use config::{ExperimentConfig, Scenario, FORMAT_VERSION};
pub use error::CliError;
pub use report::{TestRecord, VerificationReport};
pub use runner::{exit_code, run, run_config, strip_timing, RunOptions, RunOutcome};
