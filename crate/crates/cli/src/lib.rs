//! Experiment runner behind the `barw` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use cache::{CacheLookup, ProfileCache};
pub use config::{Cli, Command, Experiment, ExperimentConfig, RawArgs};
pub use error::{CliError, CliResult};
pub use experiments::{compute, run_experiment, Run};
