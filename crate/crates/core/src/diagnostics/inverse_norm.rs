use crate::error::{LinalgError, Result};
use crate::linalg::CsrMatrix;

pub const DEFAULT_INVERSE_POWER_ITERS: usize = 20;

/// LU factorization with partial pivoting in band storage.
///
/// Row interchanges are applied only to the trailing columns, as in the
/// LAPACK banded routines, so `A = P₁L₁P₂L₂⋯U`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        let n = a.n();
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            for (j, _) in a.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            ab: vec![0.0; n * width],
            ipiv: vec![0; n],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                *lu.at_mut(i, j) = v;
            }
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in k + 1..=last {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) {
                return Err(LinalgError::Breakdown {
                    column: k,
                    pivot: best,
                    threshold: 0.0,
                });
            }
            lu.ipiv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let t = lu.at(k, j);
                    *lu.at_mut(k, j) = lu.at(p, j);
                    *lu.at_mut(p, j) = t;
                }
            }
            let piv = lu.at(k, k);
            for i in k + 1..=last {
                let l = lu.at(i, k) / piv;
                *lu.at_mut(i, k) = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let v = lu.at(k, j);
                        *lu.at_mut(i, j) -= l * v;
                    }
                }
            }
        }
        Ok(lu)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.ab[self.idx(i, j)]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.ipiv[k]);
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                b[i] -= self.at(i, k) * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + self.kl + self.ku).min(n - 1) {
                acc -= self.at(i, j) * b[j];
            }
            b[i] = acc / self.at(i, i);
        }
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(self.kl + self.ku)..j {
                acc -= self.at(i, j) * b[i];
            }
            b[j] = acc / self.at(j, j);
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                acc -= self.at(i, k) * b[i];
            }
            b[k] = acc;
            b.swap(k, self.ipiv[k]);
        }
    }
}

/// Estimates `‖A⁻¹‖₂` by inverse power iteration on `AᵀA`.
///
/// The estimate approaches the true value from below.
pub fn estimate_inverse_norm(a: &CsrMatrix<f64>, iters: usize) -> Result<f64> {
    let n = a.n();
    if n == 0 {
        return Err(LinalgError::InvalidMatrix("empty matrix".into()));
    }
    let lu = BandedLu::factor(a)?;
    let mut z: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let z0 = norm(&z);
    z.iter_mut().for_each(|v| *v /= z0);
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        lu.solve_transpose(&mut z);
        lu.solve(&mut z);
        let nz = norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return Err(LinalgError::NonFinite {
                op: "estimate_inverse_norm",
            });
        }
        lambda = nz;
        z.iter_mut().for_each(|v| *v /= nz);
    }
    Ok(lambda.sqrt())
}
