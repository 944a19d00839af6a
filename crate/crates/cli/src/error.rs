use std::path::PathBuf;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("conflicting overrides for '{key}': '{first}' vs '{second}'")]
    Conflict { key: String, first: String, second: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("infeasible setup: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Core(#[from] evtol_offload::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use evtol_offload::Error as E;
        match self {
            CliError::Infeasible(_) | CliError::Core(E::PlanningExhausted(_)) => 3,
            CliError::Write { .. } | CliError::Core(E::Io(_)) => 1,
            _ => 2,
        }
    }
}
