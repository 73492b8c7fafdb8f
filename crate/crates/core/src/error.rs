use thiserror::Error;

use crate::blockreveal::BlockStructure;

/// Errors raised by the solver and its supporting stages.
#[derive(Debug, Error)]
pub enum GjbdError {
    #[error("matrix set is empty")]
    EmptySet,

    #[error("matrix {index} is {rows}x{cols}, expected {n}x{n}")]
    ShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },

    #[error("every matrix in the set is zero")]
    AllZero,

    #[error("degree {0} is too low to linearize; at least two matrices are required")]
    DegreeTooLow(usize),

    #[error("generalized Schur reduction did not converge after {iterations} iterations (stuck at eigenvalue {unconverged_at})")]
    SchurFailure {
        iterations: usize,
        unconverged_at: usize,
    },

    #[error("candidate eigenvectors are nearly dependent: |R(n,n)| = {r_nn:e} <= {tol_rank:e}; more eigenvectors are needed")]
    NearlyDependent { r_nn: f64, tol_rank: f64 },

    #[error("pool of {available} candidates cannot supply {needed} basis vectors")]
    PoolTooSmall { available: usize, needed: usize },

    #[error("eigenvector {index} has no block above the zero threshold")]
    ZeroBlock { index: usize },

    #[error("k-means labeling {kmeans:?} disagrees with connected components {components:?}")]
    InconsistentClustering {
        components: Vec<usize>,
        kmeans: Vec<usize>,
        structure: Box<BlockStructure>,
    },

    #[error("updating block {block} makes the diagonalizer singular (sigma_min / sigma_max = {ratio:e})")]
    RankCollapse { block: usize, ratio: f64 },

    #[error("real diagonalizer cost {real_cost:e} exceeds 10x the complex cost {complex_cost:e}")]
    AssumptionAViolation { real_cost: f64, complex_cost: f64 },

    #[error("the operation needs real matrices")]
    NotReal,

    #[error("subspace basis has numerical rank below {expected}")]
    RankDeficient { expected: usize },

    #[error("detected block sizes {detected:?} do not match the true sizes {truth:?}")]
    PartitionMismatch {
        detected: Vec<usize>,
        truth: Vec<usize>,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("malformed input at `{field}`: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GjbdError {
    pub fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        GjbdError::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = GjbdError> = std::result::Result<T, E>;
