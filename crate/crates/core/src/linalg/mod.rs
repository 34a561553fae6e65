//! Deterministic dense-block and sparse kernels.
//!
//! Every reduction runs sequentially in ascending index order, so repeated
//! calls on identical inputs are bit-identical.

mod block;
mod csr;
mod operator;

pub use block::{add_scaled, frobenius_inner, frobenius_norm, gemm_block_small, Block, SmallMat};
pub use csr::CsrMatrix;
pub use operator::{CountingOperator, LinearOperator};

use crate::scalar::Scalar;

/// `A X`.
pub fn spmm<T: Scalar>(a: &CsrMatrix<T>, x: &Block<T>) -> crate::error::Result<Block<T>> {
    a.spmm(x)
}

/// Frobenius norm of a sparse matrix.
pub fn csr_frobenius_norm<T: Scalar>(a: &CsrMatrix<T>) -> T {
    a.frobenius_norm()
}
