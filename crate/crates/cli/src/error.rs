use std::path::Path;

use sarplan_core::Error as CoreError;

/// Failure of one pipeline stage, carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("plan violates its constraints: {0}")]
    Plan(String),
    #[error("kinematics failure: {0}")]
    Kinematics(String),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Plan(_) => 3,
            CliError::Kinematics(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Io(_) | CoreError::Csv(_) | CoreError::Format(_) => CliError::Io(msg),
            CoreError::Unreachable { .. }
            | CoreError::SampleFailed { .. }
            | CoreError::BranchFlip { .. }
            | CoreError::RateLimit { .. } => CliError::Kinematics(msg),
            CoreError::NoCruisePhase { .. } | CoreError::DegenerateLookAt { .. } => CliError::Plan(msg),
            CoreError::PeakNotFound | CoreError::DegeneratePair => CliError::Verify(msg),
            CoreError::Domain(_) | CoreError::SingularRange { .. } => CliError::Config(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
