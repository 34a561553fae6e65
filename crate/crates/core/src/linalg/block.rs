use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;

/// Dense `n × s` column block stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    n: usize,
    s: usize,
    data: Vec<T>,
}

/// Dense `s × s` coefficient matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMat<T> {
    s: usize,
    data: Vec<T>,
}

impl<T: Scalar> Block<T> {
    pub fn zeros(n: usize, s: usize) -> Self {
        Self {
            n,
            s,
            data: vec![T::zero(); n * s],
        }
    }

    pub fn filled(n: usize, s: usize, v: T) -> Self {
        Self {
            n,
            s,
            data: vec![v; n * s],
        }
    }

    /// Wraps column-major storage.
    pub fn from_col_major(n: usize, s: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * s {
            return Err(LinalgError::mismatch("Block::from_col_major", n * s, data.len()));
        }
        Ok(Self { n, s, data })
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self> {
        let n = cols.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols.len());
        for c in cols {
            if c.len() != n {
                return Err(LinalgError::mismatch("Block::from_columns", n, c.len()));
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            n,
            s: cols.len(),
            data,
        })
    }

    pub fn from_fn(n: usize, s: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * s);
        for j in 0..s {
            for i in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, s, data }
    }

    /// The first `s` columns of the `n × n` identity.
    pub fn eye(n: usize, s: usize) -> Self {
        Self::from_fn(n, s, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.s
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.s)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.n + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.n + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(LinalgError::mismatch(
                op,
                format!("{}x{}", self.n, self.s),
                format!("{}x{}", other.n, other.s),
            ));
        }
        Ok(())
    }

    /// `tr(Xᵀ Y)` summed sequentially in column-major order.
    pub fn frobenius_inner(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other, "frobenius_inner")?;
        let mut acc = T::zero();
        for (&a, &b) in self.data.iter().zip(&other.data) {
            acc += a * b;
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> T {
        let mut acc = T::zero();
        for &a in &self.data {
            acc += a * a;
        }
        acc.sqrt()
    }

    /// `X + c Y`.
    pub fn add_scaled(&self, other: &Self, c: T) -> Result<Self> {
        self.check_same_shape(other, "add_scaled")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + c * b).collect();
        Ok(Self {
            n: self.n,
            s: self.s,
            data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self {
            n: self.n,
            s: self.s,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self {
            n: self.n,
            s: self.s,
            data,
        })
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            n: self.n,
            s: self.s,
            data: self.data.iter().map(|&a| c * a).collect(),
        }
    }

    /// `P M` for an `s × s` matrix `M`; each entry accumulates over `l` ascending.
    pub fn mul_small(&self, m: &SmallMat<T>) -> Result<Self> {
        if m.order() != self.s {
            return Err(LinalgError::mismatch("gemm_block_small", self.s, m.order()));
        }
        let mut out = Self::zeros(self.n, self.s);
        for j in 0..self.s {
            let oc = &mut out.data[j * self.n..(j + 1) * self.n];
            for (i, o) in oc.iter_mut().enumerate() {
                let mut acc = T::zero();
                for l in 0..self.s {
                    acc += self.data[l * self.n + i] * m.get(l, j);
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    /// `Xᵀ Y` as an `s_x × s_y` matrix; requires `s_x == s_y`.
    pub fn gram(&self, other: &Self) -> Result<SmallMat<T>> {
        self.check_same_shape(other, "gram")?;
        let s = self.s;
        let mut out = SmallMat::zeros(s);
        for j in 0..s {
            let yc = other.col(j);
            for i in 0..s {
                let xc = self.col(i);
                let mut acc = T::zero();
                for (&a, &b) in xc.iter().zip(yc) {
                    acc += a * b;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> Block<U> {
        Block {
            n: self.n,
            s: self.s,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64(v.as_f64()).unwrap_or_else(U::nan))
                .collect(),
        }
    }
}

/// `tr(Xᵀ Y)`.
pub fn frobenius_inner<T: Scalar>(x: &Block<T>, y: &Block<T>) -> Result<T> {
    x.frobenius_inner(y)
}

pub fn frobenius_norm<T: Scalar>(x: &Block<T>) -> T {
    x.frobenius_norm()
}

/// `P M`.
pub fn gemm_block_small<T: Scalar>(p: &Block<T>, m: &SmallMat<T>) -> Result<Block<T>> {
    p.mul_small(m)
}

/// `X + c Y`.
pub fn add_scaled<T: Scalar>(x: &Block<T>, y: &Block<T>, c: T) -> Result<Block<T>> {
    x.add_scaled(y, c)
}

impl<T: Scalar> SmallMat<T> {
    pub fn zeros(s: usize) -> Self {
        Self {
            s,
            data: vec![T::zero(); s * s],
        }
    }

    pub fn identity(s: usize) -> Self {
        let mut m = Self::zeros(s);
        for i in 0..s {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn scalar(s: usize, c: T) -> Self {
        Self::identity(s).scale(c)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let s = rows.len();
        let mut m = Self::zeros(s);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != s {
                return Err(LinalgError::mismatch("SmallMat::from_rows", s, r.len()));
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn from_fn(s: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(s);
        for j in 0..s {
            for i in 0..s {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.s + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.s + i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        let mut acc = T::zero();
        for &a in &self.data {
            acc += a * a;
        }
        acc.sqrt()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.s, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            s: self.s,
            data: self.data.iter().map(|&a| c * a).collect(),
        }
    }

    fn check_order(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.s != other.s {
            return Err(LinalgError::mismatch(op, self.s, other.s));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other, "SmallMat::add")?;
        Ok(Self {
            s: self.s,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other, "SmallMat::sub")?;
        Ok(Self {
            s: self.s,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_order(other, "SmallMat::matmul")?;
        let s = self.s;
        let mut out = Self::zeros(s);
        for j in 0..s {
            for i in 0..s {
                let mut acc = T::zero();
                for l in 0..s {
                    acc += self.get(i, l) * other.get(l, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }
}
