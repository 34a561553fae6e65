use crate::error::{LinalgError, Result};
use crate::linalg::Block;
use crate::scalar::Scalar;

/// Square sparse matrix in compressed-sparse-row form.
///
/// Column indices inside a row are strictly increasing, which fixes the
/// accumulation order of [`CsrMatrix::spmm`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    max_row_nnz: usize,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(LinalgError::InvalidMatrix(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(LinalgError::InvalidMatrix("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != values.len() || row_ptr[n] != col_idx.len() {
            return Err(LinalgError::InvalidMatrix(format!(
                "row_ptr[n] = {}, col_idx has {} entries, values has {}",
                row_ptr[n],
                col_idx.len(),
                values.len()
            )));
        }
        let mut max_row_nnz = 0;
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if hi < lo {
                return Err(LinalgError::InvalidMatrix(format!("row_ptr decreases at row {i}")));
            }
            max_row_nnz = max_row_nnz.max(hi - lo);
            let row = &col_idx[lo..hi];
            if let Some(&last) = row.last() {
                if last >= n {
                    return Err(LinalgError::InvalidMatrix(format!(
                        "column index {last} out of range in row {i}"
                    )));
                }
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidMatrix(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            max_row_nnz,
        })
    }

    /// Assembles from `(row, col, value)` triplets (0-based); duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            if i >= n || j >= n {
                return Err(LinalgError::InvalidMatrix(format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
        }
        // stable sort keeps duplicate summation in input order
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if prev == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                prev = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
            max_row_nnz: usize::from(n > 0),
        }
    }

    pub fn from_dense(n: usize, rows: &[Vec<T>]) -> Result<Self> {
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Maximum number of stored entries in any row (`m` in the error bounds).
    pub fn max_row_nnz(&self) -> usize {
        self.max_row_nnz
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Iterates `(col, value)` over row `i` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => T::zero(),
        }
    }

    /// `A X`, accumulating each row in ascending column order.
    pub fn spmm(&self, x: &Block<T>) -> Result<Block<T>> {
        if x.nrows() != self.n {
            return Err(LinalgError::mismatch("spmm", self.n, x.nrows()));
        }
        let s = x.ncols();
        let mut out = Block::zeros(self.n, s);
        for j in 0..s {
            let xc = x.col(j);
            let oc = out.col_mut(j);
            for (i, o) in oc.iter_mut().enumerate() {
                let mut acc = T::zero();
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[p] * xc[self.col_idx[p]];
                }
                *o = acc;
            }
        }
        if !out.is_finite() {
            return Err(LinalgError::NonFinite { op: "spmm" });
        }
        Ok(out)
    }

    /// `Aᵀ X`, scattering rows in ascending row order.
    pub fn spmm_transpose(&self, x: &Block<T>) -> Result<Block<T>> {
        if x.nrows() != self.n {
            return Err(LinalgError::mismatch("spmm_transpose", self.n, x.nrows()));
        }
        let s = x.ncols();
        let mut out = Block::zeros(self.n, s);
        for j in 0..s {
            let xc = x.col(j);
            let oc = out.col_mut(j);
            for (i, &xi) in xc.iter().enumerate() {
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    oc[self.col_idx[p]] += self.values[p] * xi;
                }
            }
        }
        if !out.is_finite() {
            return Err(LinalgError::NonFinite { op: "spmm_transpose" });
        }
        Ok(out)
    }

    /// Frobenius norm `sqrt(sum of squared stored values)`.
    pub fn frobenius_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &trip).expect("transpose of a valid matrix is valid")
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Converts the stored values to another scalar type.
    pub fn cast<U: Scalar>(&self) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.as_f64()).unwrap_or_else(U::nan))
                .collect(),
            max_row_nnz: self.max_row_nnz,
        }
    }
}
