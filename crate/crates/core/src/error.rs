use thiserror::Error;

use crate::numerics::Field;

/// Errors raised anywhere in the laboratory.
///
/// The CLI maps the variants onto process exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shooting error: {0}")]
    Shooting(String),

    #[error("dependency error: {0}")]
    Dependency(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("solution blew up at t={t}")]
    BlowUp { t: f64, checkpoint: Box<Field> },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 usage/configuration, 2 failed check, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::CheckFailed(_) | Error::Data(_) => 2,
            Error::Domain(_)
            | Error::Numerical(_)
            | Error::Shooting(_)
            | Error::Dependency(_)
            | Error::BlowUp { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
