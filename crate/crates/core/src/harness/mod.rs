//! Experiment harness: configuration, presets, seeds, batch runs and the
//! command line front end.

pub mod batch;
pub mod cli;
pub mod config;
pub mod seeds;
pub mod verify;

pub use batch::{run_batch, BatchReport, RunRow, RunSummary};
pub use config::{parse_config, ExperimentConfig, Mode};
pub use seeds::seed_stream;
