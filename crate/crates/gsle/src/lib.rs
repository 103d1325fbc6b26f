//! Configuration, orchestration and file output for the `gsle-core` engine.
//!
//! [`config`] turns a sectioned TOML document into validated engine configs,
//! [`experiment`] runs seed ensembles, classical ensembles, comparisons and
//! Bohmian post-processing in a bounded worker pool, and [`output`] owns the
//! CSV and JSON formats. [`cli`] wires it to the `gsle` binary.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;

pub use config::{parse_config, ConfigError, ExperimentSpec};
pub use experiment::{run_experiment, RunError};
