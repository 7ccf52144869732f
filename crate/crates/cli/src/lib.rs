//! Experiment driver for `favpts`: configuration, parallel trials with
//! deterministic seeding, CSV/JSON persistence and verification suites.

pub mod config;
pub mod error;
pub mod experiment;
pub mod tables;
pub mod verify;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, RunManifest};
pub use verify::{verify, Suite, Verdict};
