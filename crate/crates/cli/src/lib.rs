//! Experiment harness for `marl-core`: configuration files, multi-seed runs
//! and the on-disk formats for games, traces, gap reports and metrics.

pub mod config;
mod error;
pub mod harness;
pub mod io;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
