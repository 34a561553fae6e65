//! Thin Householder QR of tall blocks, `s × s` solves, and the
//! orthonormality measure fed into the generalized residual-gap bound.

use crate::error::{LinalgError, Result};
use crate::linalg::{Block, SmallMat};
use crate::scalar::Scalar;

/// Thin factorization `V = q · xi` with `xi` upper triangular and `diag(xi) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinQr<T> {
    pub q: Block<T>,
    pub xi: SmallMat<T>,
}

/// Default rank tolerance `n·u` (relative to `‖V‖`).
pub fn default_rank_tol<T: Scalar>(n: usize) -> T {
    T::from_count(n) * T::unit_roundoff()
}

/// Default breakdown tolerance `s·u` (relative to `‖M‖`).
pub fn default_breakdown_tol<T: Scalar>(s: usize) -> T {
    T::from_count(s) * T::unit_roundoff()
}

/// Thin QR with the default rank tolerance.
pub fn thin_qr<T: Scalar>(v: &Block<T>) -> Result<ThinQr<T>> {
    thin_qr_with_tol(v, default_rank_tol(v.nrows()))
}

/// Householder thin QR. Fails with [`LinalgError::RankDeficient`] when some
/// `|xi[j,j]| ≤ rank_tol · ‖V‖`.
pub fn thin_qr_with_tol<T: Scalar>(v: &Block<T>, rank_tol: T) -> Result<ThinQr<T>> {
    let (n, s) = v.shape();
    if s == 0 || n < s {
        return Err(LinalgError::mismatch("thin_qr", "n >= s >= 1".to_string(), format!("{n}x{s}")));
    }
    if !v.is_finite() {
        return Err(LinalgError::NonFinite { op: "thin_qr" });
    }
    let threshold = rank_tol * v.frobenius_norm();
    let mut work = v.as_slice().to_vec();
    let col = |j: usize| j * n;
    // reflector k: H_k = I - tau_k w_k w_kᵀ with w_k[k] = 1, stored below the diagonal
    let mut taus = vec![T::zero(); s];
    let mut diag = vec![T::zero(); s];

    for k in 0..s {
        let ck = col(k);
        let mut norm_sq = T::zero();
        for i in k..n {
            norm_sq += work[ck + i] * work[ck + i];
        }
        let alpha = norm_sq.sqrt();
        if alpha == T::zero() {
            taus[k] = T::zero();
            diag[k] = T::zero();
            for i in (k + 1)..n {
                work[ck + i] = T::zero();
            }
            continue;
        }
        let x0 = work[ck + k];
        let beta = if x0 >= T::zero() { -alpha } else { alpha };
        let denom = x0 - beta;
        for i in (k + 1)..n {
            work[ck + i] /= denom;
        }
        let tau = (beta - x0) / beta;
        taus[k] = tau;
        diag[k] = beta;
        for j in (k + 1)..s {
            let cj = col(j);
            let mut dot = work[cj + k];
            for i in (k + 1)..n {
                dot += work[ck + i] * work[cj + i];
            }
            let f = tau * dot;
            work[cj + k] -= f;
            for i in (k + 1)..n {
                let w = work[ck + i];
                work[cj + i] -= f * w;
            }
        }
    }

    let mut xi = SmallMat::zeros(s);
    for j in 0..s {
        for i in 0..j {
            xi.set(i, j, work[col(j) + i]);
        }
        xi.set(j, j, diag[j]);
    }

    // q = H_0 H_1 ... H_{s-1} [I_s; 0]
    let mut q = Block::eye(n, s);
    for k in (0..s).rev() {
        let tau = taus[k];
        if tau == T::zero() {
            continue;
        }
        let ck = col(k);
        for j in 0..s {
            let qc = q.col_mut(j);
            let mut dot = qc[k];
            for i in (k + 1)..n {
                dot += work[ck + i] * qc[i];
            }
            let f = tau * dot;
            qc[k] -= f;
            for i in (k + 1)..n {
                qc[i] -= f * work[ck + i];
            }
        }
    }

    for j in 0..s {
        if xi.get(j, j) < T::zero() {
            for c in j..s {
                xi.set(j, c, -xi.get(j, c));
            }
            for x in q.col_mut(j) {
                *x = -*x;
            }
        }
    }

    for j in 0..s {
        let d = xi.get(j, j).abs();
        if d <= threshold {
            return Err(LinalgError::RankDeficient {
                column: j,
                diag: d.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
    }
    Ok(ThinQr { q, xi })
}

/// Q-factor only.
pub fn qf<T: Scalar>(p: &Block<T>) -> Result<Block<T>> {
    thin_qr(p).map(|f| f.q)
}

/// `‖QᵀQ − I‖_F`, a computable stand-in for the distance of `Q` from the
/// nearest exactly column-orthonormal matrix.
pub fn orthonormality_departure<T: Scalar>(q: &Block<T>) -> T {
    let g = q.gram(q).expect("a block is conformal with itself");
    let s = q.ncols();
    let mut acc = T::zero();
    for j in 0..s {
        for i in 0..s {
            let target = if i == j { T::one() } else { T::zero() };
            let d = g.get(i, j) - target;
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// LU factorization with partial pivoting of an `s × s` matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: SmallMat<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factors `m`; a pivot with `|p| ≤ breakdown_tol · ‖m‖_F` is a breakdown.
    pub fn factor(m: &SmallMat<T>, breakdown_tol: T) -> Result<Self> {
        let s = m.order();
        if !m.is_finite() {
            return Err(LinalgError::NonFinite { op: "lu" });
        }
        let threshold = breakdown_tol * m.frobenius_norm();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..s).collect();
        for k in 0..s {
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in (k + 1)..s {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || best == T::zero() {
                return Err(LinalgError::Breakdown {
                    column: k,
                    pivot: best.as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..s {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..s {
                let l = lu.get(i, k) / pivot;
                lu.set(i, k, l);
                for j in (k + 1)..s {
                    lu.set(i, j, lu.get(i, j) - l * lu.get(k, j));
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// Solves `M z = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let s = self.lu.order();
        let permuted: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..s {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * b[j];
            }
            b[i] = acc;
        }
        for i in (0..s).rev() {
            let mut acc = b[i];
            for j in (i + 1)..s {
                acc -= self.lu.get(i, j) * b[j];
            }
            b[i] = acc / self.lu.get(i, i);
        }
    }
}

/// Solves `M Z = C` with the default breakdown tolerance.
pub fn solve_small<T: Scalar>(m: &SmallMat<T>, c: &SmallMat<T>) -> Result<SmallMat<T>> {
    solve_small_with_tol(m, c, default_breakdown_tol(m.order()))
}

pub fn solve_small_with_tol<T: Scalar>(
    m: &SmallMat<T>,
    c: &SmallMat<T>,
    breakdown_tol: T,
) -> Result<SmallMat<T>> {
    let s = m.order();
    if c.order() != s {
        return Err(LinalgError::mismatch("solve_small", s, c.order()));
    }
    let lu = Lu::factor(m, breakdown_tol)?;
    let mut z = SmallMat::zeros(s);
    let mut buf = vec![T::zero(); s];
    for j in 0..s {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = c.get(i, j);
        }
        lu.solve_in_place(&mut buf);
        for (i, &b) in buf.iter().enumerate() {
            z.set(i, j, b);
        }
    }
    Ok(z)
}

/// Solves `V′ M = C` for the `n × s` block `V′` (via `Mᵀ V′ᵀ = Cᵀ`).
pub fn right_solve<T: Scalar>(c: &Block<T>, m: &SmallMat<T>) -> Result<Block<T>> {
    right_solve_with_tol(c, m, default_breakdown_tol(m.order()))
}

pub fn right_solve_with_tol<T: Scalar>(
    c: &Block<T>,
    m: &SmallMat<T>,
    breakdown_tol: T,
) -> Result<Block<T>> {
    let (n, s) = c.shape();
    if m.order() != s {
        return Err(LinalgError::mismatch("right_solve", s, m.order()));
    }
    let lu = Lu::factor(&m.transpose(), breakdown_tol)?;
    let mut out = Block::zeros(n, s);
    let mut buf = vec![T::zero(); s];
    for i in 0..n {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = c.get(i, j);
        }
        lu.solve_in_place(&mut buf);
        for (j, &b) in buf.iter().enumerate() {
            out.set(i, j, b);
        }
    }
    Ok(out)
}

/// `η = (UᵀU)⁻¹ (Uᵀ S)`, the minimizer of `‖S − U η‖_F`, via the normal equations.
pub fn least_squares_eta<T: Scalar>(u: &Block<T>, s: &Block<T>) -> Result<SmallMat<T>> {
    if u.shape() != s.shape() {
        return Err(LinalgError::mismatch(
            "least_squares_eta",
            format!("{}x{}", u.nrows(), u.ncols()),
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    let utu = u.gram(u)?;
    let uts = u.gram(s)?;
    solve_small(&utu, &uts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn orthonormal_input_is_reproduced() {
        let v = Block::from_columns(&[vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let f = thin_qr(&v).unwrap();
        for (a, b) in f.q.as_slice().iter().zip(v.as_slice()) {
            assert!(close(*a, *b, 1e-15));
        }
        let eye = SmallMat::<f64>::identity(2);
        for (a, b) in f.xi.as_slice().iter().zip(eye.as_slice()) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn single_column_normalizes() {
        let v = Block::from_columns(&[vec![3.0, 4.0]]).unwrap();
        let f = thin_qr(&v).unwrap();
        assert!(close(f.q.get(0, 0), 0.6, 1e-15));
        assert!(close(f.q.get(1, 0), 0.8, 1e-15));
        assert!(close(f.xi.get(0, 0), 5.0, 1e-14));
        assert_eq!(qf(&v).unwrap(), f.q);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let v = Block::from_columns(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        match thin_qr(&v) {
            Err(LinalgError::RankDeficient { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(qf(&v).is_err());
    }

    #[test]
    fn wide_block_rejected() {
        assert!(thin_qr(&Block::<f64>::zeros(1, 2)).is_err());
    }

    #[test]
    fn xi_upper_triangular_with_nonnegative_diagonal() {
        let v = Block::from_fn(7, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * j as f64);
        let f = thin_qr(&v).unwrap();
        for j in 0..3 {
            assert!(f.xi.get(j, j) >= 0.0);
            for i in (j + 1)..3 {
                assert_eq!(f.xi.get(i, j), 0.0);
            }
        }
        let rec = f.q.mul_small(&f.xi).unwrap().sub(&v).unwrap();
        assert!(rec.frobenius_norm() <= 1e-14 * v.frobenius_norm());
    }

    #[test]
    fn small_solves_trivial_cases() {
        let c = SmallMat::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert_eq!(solve_small(&SmallMat::identity(2), &c).unwrap(), c);
        let d = SmallMat::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let z = solve_small(&d, &SmallMat::identity(2)).unwrap();
        assert_eq!(z, SmallMat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.25]]).unwrap());
    }

    #[test]
    fn singular_small_matrix_breaks_down() {
        let m = SmallMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_small(&m, &SmallMat::identity(2)),
            Err(LinalgError::Breakdown { .. })
        ));
    }

    #[test]
    fn right_solve_trivial_cases() {
        let c = Block::from_fn(5, 2, |i, j| i as f64 - 2.0 * j as f64);
        assert_eq!(right_solve(&c, &SmallMat::identity(2)).unwrap(), c);
        assert_eq!(right_solve(&c, &SmallMat::scalar(2, 2.0)).unwrap(), c.scale(0.5));
    }

    #[test]
    fn least_squares_trivial_cases() {
        let u = Block::from_fn(6, 2, |i, j| ((i + 2 * j) % 4) as f64 + 0.5 * j as f64);
        let eta = least_squares_eta(&u, &u).unwrap();
        let eye = SmallMat::<f64>::identity(2);
        for (a, b) in eta.as_slice().iter().zip(eye.as_slice()) {
            assert!(close(*a, *b, 1e-13));
        }
        // columns orthogonal to range(U)
        let u = Block::from_columns(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let s = Block::from_columns(&[vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0, -1.0]]).unwrap();
        assert!(least_squares_eta(&u, &s).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn least_squares_normal_equation_hand_case() {
        // U = [e1 e2], S = [e1 + e3, e2] in R^3
        let u = Block::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let s = Block::from_columns(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let eta = least_squares_eta(&u, &s).unwrap();
        assert_eq!(eta, SmallMat::identity(2));
        let res = s.sub(&u.mul_small(&eta).unwrap()).unwrap();
        assert_eq!(res, Block::from_columns(&[vec![0.0, 0.0, 1.0], vec![0.0; 3]]).unwrap());
    }

    #[test]
    fn departure_scalar_case() {
        let q = Block::from_columns(&[vec![2.0, 0.0]]).unwrap();
        assert_eq!(orthonormality_departure(&q), 3.0);
        assert_eq!(orthonormality_departure(&Block::<f64>::eye(4, 2)), 0.0);
    }
}
