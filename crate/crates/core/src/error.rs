use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid transfer function: {0}")]
    InvalidSystem(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("system needs {needed} samples of input but only {available} are available (lead {lead})")]
    InsufficientFuture {
        needed: usize,
        available: usize,
        lead: usize,
    },

    #[error("frequency response is singular at omega = {omega} rad/sample ({what})")]
    SingularResponse { omega: f64, what: String },

    #[error("closed loop is unstable on axis {axis}: pole magnitude {pole_magnitude}")]
    UnstableLoop { axis: usize, pole_magnitude: f64 },

    #[error("{0}")]
    NotDiagonal(String),

    #[error("least-squares problem is ill-conditioned (condition number {condition:e}); use more taps or a smaller lead")]
    IllConditioned { condition: f64 },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("causality violation for trainer {trainer}: filters need {required} samples of preview but the head start is {head_start}")]
    Causality {
        trainer: usize,
        required: usize,
        head_start: usize,
    },

    #[error("convergence margin {margin:.6} does not satisfy the enforced bound {bound:.6} ({policy})")]
    ConvergenceRefused { margin: f64, bound: f64, policy: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
