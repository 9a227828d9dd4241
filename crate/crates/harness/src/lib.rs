//! Experiment runner, acceptance checks, and the labeling-session service
//! for `pairclust`.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod server;
pub mod session;

pub use config::{ExperimentConfig, InstanceSpec, Method};
pub use experiment::{run_experiment, rows_to_csv, write_rows, ExperimentRow, FinalCost};
pub use session::{LabelSession, SessionConfig, SessionManager};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] pairclust::Error),
    #[error("session {0} not found")]
    NotFound(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}
