use std::cell::Cell;

use crate::error::Result;
use crate::linalg::{Block, CsrMatrix};
use crate::scalar::Scalar;

/// Something that can be multiplied onto an `n × s` block.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Block<T>) -> Result<Block<T>>;
}

impl<T: Scalar> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &Block<T>) -> Result<Block<T>> {
        self.spmm(x)
    }
}

/// Wraps a matrix and counts block multiplications.
///
/// Not `Sync`: one counter belongs to one solver run.
pub struct CountingOperator<'a, T> {
    matrix: &'a CsrMatrix<T>,
    count: Cell<usize>,
}

impl<'a, T: Scalar> CountingOperator<'a, T> {
    pub fn new(matrix: &'a CsrMatrix<T>) -> Self {
        Self {
            matrix,
            count: Cell::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.get()
    }

    pub fn matrix(&self) -> &'a CsrMatrix<T> {
        self.matrix
    }
}

impl<T: Scalar> LinearOperator<T> for CountingOperator<'_, T> {
    fn dim(&self) -> usize {
        self.matrix.n()
    }

    fn apply(&self, x: &Block<T>) -> Result<Block<T>> {
        self.count.set(self.count.get() + 1);
        self.matrix.spmm(x)
    }
}
