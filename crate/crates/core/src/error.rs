use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("input vector {index} is dependent on its predecessors (residual {residual:e})")]
    DependentInput { index: usize, residual: f64 },

    #[error("resultant vanishes identically; the forms share a component")]
    DegenerateResultant,

    #[error("jacobian is numerically singular")]
    SingularJacobian,

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("pencil has a kernel of dimension >= 2 (second smallest singular value {sigma:e})")]
    RankDeficientPencil { sigma: f64 },

    #[error("no certified section zero among {candidates} polished candidates")]
    NoSectionZero { candidates: usize },

    #[error("flag construction degenerate: {0}")]
    FlagDegenerate(String),

    #[error("count is unstable across trials: {counts:?}")]
    UnstableCount { counts: Vec<usize> },

    #[error("unsolved: {0}")]
    Unsolved(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
