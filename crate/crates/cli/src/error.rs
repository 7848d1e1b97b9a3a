use thiserror::Error;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Model(glucopt_core::Error),
    #[error("no bracket: {0}")]
    NoBracket(String),
    #[error("partial plan: {0}")]
    PartialPlan(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) | CliError::Io(_) => 3,
            CliError::NoBracket(_) => 4,
            CliError::PartialPlan(_) => 5,
        }
    }
}

impl From<glucopt_core::Error> for CliError {
    fn from(e: glucopt_core::Error) -> Self {
        use glucopt_core::Error as E;
        match e {
            E::NoBracket { .. } | E::BracketFailure { .. } => CliError::NoBracket(e.to_string()),
            E::NoDeliveryTimes | E::GridMisalignment { .. } | E::InvalidParameter { .. } | E::InvalidSchedule(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Model(other),
        }
    }
}
