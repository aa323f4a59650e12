//! Configuration-driven experiments over a β sweep and a seed list.
//!
//! The `chaotic-rl` binary is a thin front end over [`pipeline`] and
//! [`diagnose`]; everything it does is available here.

pub mod config;
pub mod diagnose;
pub mod error;
pub mod heatmap;
pub mod output;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_experiment, RolloutMetrics};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
struct Guide;
