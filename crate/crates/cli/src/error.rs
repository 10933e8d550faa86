use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("validation threshold exceeded: {0}")]
    Threshold(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 when a validation
    /// threshold fails, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Threshold(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<uplink_aoi::Error> for CliError {
    fn from(e: uplink_aoi::Error) -> Self {
        match e {
            uplink_aoi::Error::InvalidParameter { .. } | uplink_aoi::Error::Config(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
