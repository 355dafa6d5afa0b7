use thiserror::Error;

/// Errors produced by the numerical pipeline.
///
/// Variants are grouped so that front ends can map them onto distinct exit
/// codes: configuration problems, numerical non-convergence, and violated
/// mathematical preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("unknown {kind} `{name}` (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    pub fn non_convergence(message: impl Into<String>) -> Self {
        Error::NonConvergence(message.into())
    }

    /// Broad category used by command-line front ends.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } | Error::UnknownStrategy { .. } | Error::Parse(_) => {
                ErrorCategory::Config
            }
            Error::NonConvergence(_) => ErrorCategory::Numerical,
            Error::Precondition(_) => ErrorCategory::Precondition,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Precondition,
    Io,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
