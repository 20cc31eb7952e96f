use thiserror::Error;

use crate::numeric::SchurForm;

#[derive(Debug, Error)]
pub enum JcfError {
    #[error("empty input")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("starting vector is zero")]
    ZeroVector,
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not upper triangular")]
    NotTriangular,
    #[error("matrix is rank deficient (estimated reciprocal condition {rcond:.3e})")]
    RankDeficient { rcond: f64 },
    #[error("Schur iteration did not converge after {iterations} sweeps")]
    SchurNoConvergence { iterations: usize, partial: Box<SchurForm> },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("{what} diverged: step norm grew three times in a row")]
    Diverged { what: &'static str },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("structure mismatch at block {block}, column {column}: null space is not isolated")]
    StructureMismatch { block: usize, column: usize },
    #[error("invalid staircase: {0}")]
    InvalidStaircase(String),
    #[error("polynomial has a vanishing leading coefficient")]
    DegenerateLeading,
    #[error("polynomial structure could not be determined: {0}")]
    StructureUndetermined(String),
    #[error("structure identification failed: {0}")]
    Identification(String),
}

pub type Result<T> = std::result::Result<T, JcfError>;
