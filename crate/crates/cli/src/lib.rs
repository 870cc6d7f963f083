//! Command-line experiments: validating and analyzing networks, running
//! election trials, and running verifier batteries.

pub mod checks;
pub mod commands;
pub mod config;
pub mod experiment;

pub use commands::{main_with, Cli, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
pub use config::{AlgorithmChoice, ExperimentConfig, GraphSource, ModeRequest, SchedulerChoice};
pub use experiment::{prepare, run_experiment, Prepared, TrialRecord, TrialSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    /// The knowledge cannot support the requested election.
    #[error("refused: {0}")]
    Refused(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        }
    }
}
