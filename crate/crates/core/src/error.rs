use thiserror::Error;

/// Errors raised by the model, analytic and simulator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("downlink queue unstable: (theta + 1) * p = {load} >= 1")]
    Unstable { load: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
