use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed document; the message starts with `path:line:column`.
    #[error("{0}")]
    Parse(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0} (raise `--budget` or `run.budget`)")]
    Budget(shrinkdim::Error),
    #[error(transparent)]
    Compute(shrinkdim::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<shrinkdim::Error> for CliError {
    fn from(e: shrinkdim::Error) -> Self {
        match e {
            shrinkdim::Error::Budget { .. } => CliError::Budget(e),
            e => CliError::Compute(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Compute(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}
