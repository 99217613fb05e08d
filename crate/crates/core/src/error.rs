//! Error type shared across the crate.
//!
//! The CLI maps variants to process exit codes: configuration problems exit
//! with 2, solver non-convergence with 3; check failures in the run modes are
//! verdicts, not errors, and exit with 4 from the run layer itself.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration or invalid constructor arguments.
    #[error("config error: {0}")]
    Config(String),

    /// A documented precondition of an operation was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iteration budget ran out. Carries the tail of the residual or gap
    /// history so the failure is diagnosable from the report alone.
    #[error("{message}")]
    NonConvergence { message: String, history: Vec<f64> },

    /// A radial profile failed its own validity checks (sign loss, blow-up,
    /// or a substitution residual above tolerance).
    #[error("radial oracle invalid: {0}")]
    OracleInvalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) => 2,
            Error::NonConvergence { .. } => 3,
            Error::OracleInvalid(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
