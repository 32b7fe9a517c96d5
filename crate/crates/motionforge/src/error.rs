//! Shared error type for the toolkit.

use crate::kinematics::RootPose;

/// Diagnostic payload attached to a solver that failed to converge.
///
/// Carries the last accepted iterate so callers can inspect or reuse it.
#[derive(Debug, Clone)]
pub struct ConvergenceFailure {
    pub context: String,
    /// Frame index for per-frame solvers, if applicable.
    pub frame: Option<usize>,
    pub last_cost: f64,
    pub iterations: usize,
    pub last_q: Vec<f64>,
    pub last_root: Option<RootPose>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver failed to converge in {}: cost {} after {} iterations", .0.context, .0.last_cost, .0.iterations)]
    Convergence(Box<ConvergenceFailure>),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Numeric(_) => 4,
            Error::Stage { source, .. } => match source.as_ref() {
                Error::Numeric(_) => 4,
                _ => 3,
            },
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
