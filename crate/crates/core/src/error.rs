use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("particle index out of range: level {level}, index {index} (levels: {levels})")]
    Index { level: usize, index: usize, levels: usize },

    #[error("singular point: {0}")]
    Singularity(String),

    #[error("point outside the liquid region: {0}")]
    Domain(String),

    #[error("finite-difference stencil straddles the separating line mu = {mu0}")]
    BranchCrossing { mu0: f64 },

    #[error("pole of kpz_f at y = {0}")]
    Pole(f64),

    #[error("quadrature failed to converge at {nodes} nodes: last estimates {previous:e} and {last:e}")]
    QuadratureFailure { nodes: usize, previous: f64, last: f64 },

    #[error("cancellation exceeds working precision: {0}")]
    PrecisionLoss(String),

    #[error("summation window too small: last included term {last_term:e} exceeds {threshold:e}")]
    Truncation { last_term: f64, threshold: f64 },

    #[error("diverges at coincident points")]
    Divergence,

    #[error("field is missing the lattice point ({x}, {m})")]
    IncompleteField { x: i64, m: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("probe ({x}, {m}) was not registered")]
    UnregisteredProbe { x: i64, m: usize },

    #[error("ensemble stopped after {completed} of {requested} replicas: {reason}")]
    PartialRun { completed: usize, requested: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
