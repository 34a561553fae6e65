//! Block cross-interactive residual smoothing for block BiCGSTAB with
//! multiple right-hand sides.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the common instantiations. Matrix ingest, diagnostics
//! records and bound evaluation work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod qr;
pub mod scalar;
pub mod smoothing;
pub mod solvers;

pub use error::{LinalgError, Result};
pub use linalg::{Block, CountingOperator, CsrMatrix, LinearOperator, SmallMat};
pub use scalar::Scalar;
pub use solvers::{bicgstab_pq_run, run_suite, RunResult, RunStatus, SolverError, SolverOptions, Variant};

pub type CsrMatrixF64 = CsrMatrix<f64>;
pub type CsrMatrixF32 = CsrMatrix<f32>;
pub type BlockF64 = Block<f64>;
pub type BlockF32 = Block<f32>;
pub type SmallMatF64 = SmallMat<f64>;
pub type SmallMatF32 = SmallMat<f32>;
pub type SmootherStateF64 = smoothing::SmootherState<f64>;
pub type RunResultF64 = RunResult<f64>;
