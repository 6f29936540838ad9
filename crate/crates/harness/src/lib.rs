//! Monte-Carlo runner, statistics and result files for the arraygnss receivers.

use std::path::PathBuf;

pub mod config;
pub mod emit;
pub mod runner;
pub mod stats;

pub use config::ScenarioConfig;
pub use runner::{run_scenario, trial_seed, RunResults, TrialRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Trial(#[from] arraygnss::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration, 3 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
            _ => 1,
        }
    }
}
