//! Experiment runner for unfolded projected-gradient power allocation.
//!
//! Configuration files, dataset and schedule formats, the grid-oracle cache,
//! a rayon-backed executor and the scenarios behind the `unfolded-pgd` CLI.
//! The numerics live in `unfolded-pgd-core`.

pub mod cache;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
pub mod manifest;
pub mod scenarios;
pub mod seeds;

pub use config::{ExperimentConfig, Scenario};
pub use error::{HarnessError, Result};
pub use exec::RayonExecutor;
pub use scenarios::Runner;
