//! Experiment runner for fictitious-thickness studies: preset runs, coefficient sweeps,
//! heatmap rasters and the verification battery.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiment;
pub mod heatmap;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
