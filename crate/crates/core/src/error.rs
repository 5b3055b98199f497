use thiserror::Error;

/// Shape of a matrix, `(rows, cols)`.
pub type Shape = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },

    #[error("{op}: expected a square matrix, got {shape:?}")]
    NotSquare { op: &'static str, shape: Shape },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("entry count {len} does not match shape {shape:?}")]
    BadLength { len: usize, shape: Shape },

    #[error("block cut ({row_cut}, {col_cut}) out of range for shape {shape:?}")]
    CutOutOfRange {
        row_cut: usize,
        col_cut: usize,
        shape: Shape,
    },

    #[error("blocks are not conformal: {0}")]
    NonConformal(String),

    #[error("Jacobi SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is numerically singular: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("matrix is not Hermitian positive definite: factor entry {index} is {value:.3e}")]
    NotHpd { index: usize, value: f64 },

    #[error("hypothesis `{check}` violated: residual {residual:.3e} exceeds {threshold:.3e}")]
    HypothesisViolation {
        check: String,
        residual: f64,
        threshold: f64,
    },

    #[error("verdict and structure report come from different inputs: {0}")]
    ProvenanceMismatch(String),

    #[error("infeasible instance spec: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
