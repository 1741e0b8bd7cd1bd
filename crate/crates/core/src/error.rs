//! Error type shared by all modules, with the process exit codes used by
//! the command-line tool.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain (bad index set,
    /// mismatched dimensions, `rho_bar` not above the latent spectral
    /// radius, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input file failed to parse. The message carries the file and,
    /// where the underlying parser provides it, the offending line/field.
    #[error("data format error: {0}")]
    DataFormat(String),

    /// A transfer-function evaluation hit a (numerically) singular matrix.
    #[error("transfer function singular at omega = {omega}")]
    SingularAt { omega: f64 },

    /// The simulated state left the overflow guard (|x| > 1e100).
    #[error("simulation state overflowed at step {step}")]
    NumericOverflow { step: usize },

    /// A ratio statistic whose denominator is zero (e.g. R^2 of an
    /// all-zero holdout record).
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code contract: 0 success, 2 usage, 3 data format, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::DataFormat(_) | Error::Io(_) => 3,
            Error::SingularAt { .. }
            | Error::NumericOverflow { .. }
            | Error::UndefinedRatio(_) => 4,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::DataFormat(msg.into())
    }
}
