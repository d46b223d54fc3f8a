use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by frontends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed files, invalid parameters, graph invariant violations.
    Validation,
    /// A combinatorial guard refused the request.
    Budget,
    /// A numerical routine broke down.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conflicting duplicate edge {{{i}, {j}}}: weight {first} vs {second}")]
    ConflictingEdge { i: u64, j: u64, first: f64, second: f64 },

    #[error("self-loop on node {0}")]
    SelfLoop(u64),

    #[error("stubborn set empty")]
    EmptyStubborn,

    #[error("stubborn id {0} not in node range")]
    StubbornOutOfRange(u64),

    #[error("regular node {0} is isolated")]
    IsolatedNode(u64),

    #[error("reachability violated: {0} component(s) without a stubborn node")]
    Unreachable(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Schur stable (spectral radius {0})")]
    NotSchurStable(f64),

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("matrix not positive definite in {0}")]
    NotPositiveDefinite(&'static str),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("{0}")]
    Inconsistent(String),

    #[error("candidate {candidate} has degenerate Schur complement {schur:e}")]
    DegenerateCandidate { candidate: usize, schur: f64 },

    #[error("all candidates degenerate in round {0}")]
    DegenerateCandidates(usize),

    #[error("combinatorial budget exceeded: {subsets} subsets > budget {budget}")]
    BudgetExceeded { subsets: f64, budget: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::BudgetExceeded { .. } => ErrorClass::Budget,
            Error::NotSchurStable(_)
            | Error::Singular(_)
            | Error::NotPositiveDefinite(_)
            | Error::NoConvergence { .. }
            | Error::Inconsistent(_)
            | Error::DegenerateCandidate { .. }
            | Error::DegenerateCandidates(_) => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}
