//! Experiment runner, data generators and report writers for `bicog`.

use thiserror::Error;

pub mod app;
pub mod config;
pub mod csv_load;
pub mod experiment;
pub mod generators;
pub mod reports;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_seed, SeedRun, Source};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BICOG_OUT_DIR";

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(String),
    #[error("run: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}
