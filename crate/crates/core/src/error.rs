use thiserror::Error;

/// Errors raised while building networks, factorizing operators or running solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("branch {branch} ({from} -> {to}) has non-positive susceptance weight {weight}")]
    NonInductiveBranch {
        branch: usize,
        from: usize,
        to: usize,
        weight: f64,
    },

    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("missing table `{0}`")]
    MissingTable(String),

    #[error("expected exactly one reference bus, found {0}")]
    ReferenceBusCount(usize),

    #[error("matrix is not positive definite (pivot {pivot} at column {column})")]
    Indefinite { column: usize, pivot: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("singular matrix (pivot at column {column})")]
    Singular { column: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("branch variable left (-1, 1): |psi[{branch}]| = {value} at iteration {iteration}")]
    PsiOutOfRange {
        iteration: usize,
        branch: usize,
        value: f64,
    },

    #[error("iteration did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("iteration diverged at step {0}")]
    Diverged(usize),

    #[error("linear solve failed: {0}")]
    LinearFailure(String),

    #[error("certificate hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("certificate condition fails: Gamma^2 + 2 Gamma rho = {0} >= 1")]
    InfeasibleCertificate(f64),

    #[error("base case is not solvable by Newton-Raphson from flat start")]
    BaseCaseInfeasible,

    #[error("reference solution unavailable: {0}")]
    Reference(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
