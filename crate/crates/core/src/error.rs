use thiserror::Error;

/// Failures raised by the dense/sparse kernels, the QR factorization and
/// the small linear solves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("rank-deficient block: |xi[{column},{column}]| = {diag:e} is below the rank tolerance {threshold:e}")]
    RankDeficient {
        column: usize,
        diag: f64,
        threshold: f64,
    },
    #[error("breakdown: pivot {pivot:e} in column {column} is below {threshold:e}")]
    Breakdown {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
}

impl LinalgError {
    pub(crate) fn mismatch(
        op: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        LinalgError::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T, E = LinalgError> = std::result::Result<T, E>;
