//! Block residual smoothing.
//!
//! Four schemes share one state type:
//!
//! * simple residual smoothing ([`srs_step`]), an observer that post-processes
//!   a primary pair `(X_k, R_k)` without feeding anything back;
//! * underlying cross-interactive smoothing ([`cirs_underlying_step`]) with an
//!   `s × s` parameter `η` and an explicit `A V` per step;
//! * cross-interactive smoothing with orthonormalized auxiliary blocks
//!   ([`cirs_ortho_step`]), which updates `Y` and `S` through a Householder
//!   Q-factor;
//! * the global variant ([`gl_cirs_step`]) with a scalar parameter.
//!
//! The cross-interactive schemes consume the primary direction
//! `P̃_k = X_{k+1} − X_k` and hand back the primary pair `(X_{k+1}, R_{k+1})`
//! that the solver continues from.

use crate::error::{LinalgError, Result};
use crate::linalg::{Block, LinearOperator, SmallMat};
use crate::qr::{least_squares_eta, thin_qr};
use crate::scalar::Scalar;

/// Smoothed sequence `(Y_k, S_k)` plus the auxiliary quantities of each scheme.
#[derive(Debug, Clone)]
pub struct SmootherState<T> {
    /// Smoothed approximation `Y_k`.
    pub y: Block<T>,
    /// Smoothed residual `S_k`.
    pub s_res: Block<T>,
    /// Auxiliary block `V_k` (underlying and global schemes).
    pub v: Block<T>,
    /// Orthonormalized auxiliary block `Q̃_k`.
    pub q_tilde: Block<T>,
    /// `ζ̃_k = ξ̃_k − η̃_k`.
    pub zeta: SmallMat<T>,
    /// Last block parameter (`η_k` or `η̃_k`; `−η` convention not used).
    pub eta: SmallMat<T>,
    /// Last scalar parameter of the global scheme.
    pub eta_scalar: T,
    pub k: usize,
}

/// Primary pair handed back to the solver by a cross-interactive step.
#[derive(Debug, Clone)]
pub struct SmoothStepResult<T> {
    pub x_next: Block<T>,
    pub r_next: Block<T>,
    pub eta_norm: T,
}

impl<T: Scalar> SmootherState<T> {
    /// `Y_0 = X_0`, `S_0 = R_0`, every auxiliary quantity zero.
    pub fn new(x0: &Block<T>, r0: &Block<T>) -> Result<Self> {
        if x0.shape() != r0.shape() {
            return Err(LinalgError::mismatch(
                "SmootherState::new",
                format!("{}x{}", x0.nrows(), x0.ncols()),
                format!("{}x{}", r0.nrows(), r0.ncols()),
            ));
        }
        let (n, s) = x0.shape();
        Ok(Self {
            y: x0.clone(),
            s_res: r0.clone(),
            v: Block::zeros(n, s),
            q_tilde: Block::zeros(n, s),
            zeta: SmallMat::zeros(s),
            eta: SmallMat::zeros(s),
            eta_scalar: T::zero(),
            k: 0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    fn check_input(&self, b: &Block<T>, op: &'static str) -> Result<()> {
        if b.shape() != self.shape() {
            let (n, s) = self.shape();
            return Err(LinalgError::mismatch(
                op,
                format!("{n}x{s}"),
                format!("{}x{}", b.nrows(), b.ncols()),
            ));
        }
        Ok(())
    }
}

fn ensure_finite<T: Scalar>(blocks: &[&Block<T>], op: &'static str) -> Result<()> {
    if blocks.iter().all(|b| b.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite { op })
    }
}

/// Simple residual smoothing of the primary pair `(x_k, r_k)`:
/// `E = r_k − S`, `η = −(EᵀE)⁻¹EᵀS`, `Y ← Y + (x_k − Y)η`, `S ← S + Eη`.
pub fn srs_step<T: Scalar>(state: &mut SmootherState<T>, x_k: &Block<T>, r_k: &Block<T>) -> Result<()> {
    state.check_input(x_k, "srs_step")?;
    state.check_input(r_k, "srs_step")?;
    let e = r_k.sub(&state.s_res)?;
    let eta = least_squares_eta(&e, &state.s_res)?.scale(-T::one());
    let dx = x_k.sub(&state.y)?;
    let y = state.y.add(&dx.mul_small(&eta)?)?;
    let s = state.s_res.add(&e.mul_small(&eta)?)?;
    ensure_finite(&[&y, &s], "srs_step")?;
    state.y = y;
    state.s_res = s;
    state.eta = eta;
    state.k += 1;
    Ok(())
}

/// Underlying block CIRS step:
/// `V ← V(I − η) + P̃`, `U = A V`, `η = (UᵀU)⁻¹UᵀS`, `Y ← Y + Vη`, `S ← S − Uη`,
/// returning `X = Y + V(I − η)` and `R = S − U(I − η)`.
pub fn cirs_underlying_step<T: Scalar, A: LinearOperator<T> + ?Sized>(
    state: &mut SmootherState<T>,
    p_tilde: &Block<T>,
    a: &A,
) -> Result<SmoothStepResult<T>> {
    state.check_input(p_tilde, "cirs_underlying_step")?;
    let s = state.shape().1;
    let damp = SmallMat::identity(s).sub(&state.eta)?;
    let v = state.v.mul_small(&damp)?.add(p_tilde)?;
    let u = a.apply(&v)?;
    let eta = least_squares_eta(&u, &state.s_res)?;
    let y = state.y.add(&v.mul_small(&eta)?)?;
    let s_new = state.s_res.sub(&u.mul_small(&eta)?)?;
    let rest = SmallMat::identity(s).sub(&eta)?;
    let x_next = y.add(&v.mul_small(&rest)?)?;
    let r_next = s_new.sub(&u.mul_small(&rest)?)?;
    ensure_finite(&[&y, &s_new, &x_next, &r_next], "cirs_underlying_step")?;
    let eta_norm = eta.frobenius_norm();
    state.v = v;
    state.y = y;
    state.s_res = s_new;
    state.eta = eta;
    state.k += 1;
    Ok(SmoothStepResult {
        x_next,
        r_next,
        eta_norm,
    })
}

/// Block CIRS step with orthonormalization:
/// `V = Q̃ζ̃ + P̃`, `[Q̃, ξ̃] = qr(V)`, `Ũ = AQ̃`, `η̃ = (ŨᵀŨ)⁻¹ŨᵀS`,
/// `Y ← Y + Q̃η̃`, `S ← S − Ũη̃`, `ζ̃ = ξ̃ − η̃`,
/// returning `X = Y + Q̃ζ̃` and `R = S − Ũζ̃`.
pub fn cirs_ortho_step<T: Scalar, A: LinearOperator<T> + ?Sized>(
    state: &mut SmootherState<T>,
    p_tilde: &Block<T>,
    a: &A,
) -> Result<SmoothStepResult<T>> {
    state.check_input(p_tilde, "cirs_ortho_step")?;
    let v = state.q_tilde.mul_small(&state.zeta)?.add(p_tilde)?;
    let qr = thin_qr(&v)?;
    let u = a.apply(&qr.q)?;
    let eta = least_squares_eta(&u, &state.s_res)?;
    let y = state.y.add(&qr.q.mul_small(&eta)?)?;
    let s_new = state.s_res.sub(&u.mul_small(&eta)?)?;
    let zeta = qr.xi.sub(&eta)?;
    let x_next = y.add(&qr.q.mul_small(&zeta)?)?;
    let r_next = s_new.sub(&u.mul_small(&zeta)?)?;
    ensure_finite(&[&y, &s_new, &x_next, &r_next], "cirs_ortho_step")?;
    let eta_norm = eta.frobenius_norm();
    state.v = v;
    state.q_tilde = qr.q;
    state.zeta = zeta;
    state.y = y;
    state.s_res = s_new;
    state.eta = eta;
    state.k += 1;
    Ok(SmoothStepResult {
        x_next,
        r_next,
        eta_norm,
    })
}

/// Global CIRS step: the underlying recursion with `η` restricted to a
/// multiple of the identity, `η = ⟨U, S⟩_F / ⟨U, U⟩_F`.
pub fn gl_cirs_step<T: Scalar, A: LinearOperator<T> + ?Sized>(
    state: &mut SmootherState<T>,
    p_tilde: &Block<T>,
    a: &A,
) -> Result<SmoothStepResult<T>> {
    state.check_input(p_tilde, "gl_cirs_step")?;
    let v = state.v.scale(T::one() - state.eta_scalar).add(p_tilde)?;
    let u = a.apply(&v)?;
    let uu = u.frobenius_inner(&u)?;
    if uu == T::zero() || !uu.is_finite() {
        return Err(LinalgError::Breakdown {
            column: 0,
            pivot: uu.as_f64(),
            threshold: 0.0,
        });
    }
    let eta = u.frobenius_inner(&state.s_res)? / uu;
    let y = state.y.add(&v.scale(eta))?;
    let s_new = state.s_res.sub(&u.scale(eta))?;
    let rest = T::one() - eta;
    let x_next = y.add(&v.scale(rest))?;
    let r_next = s_new.sub(&u.scale(rest))?;
    ensure_finite(&[&y, &s_new, &x_next, &r_next], "gl_cirs_step")?;
    let s = state.shape().1;
    state.v = v;
    state.y = y;
    state.s_res = s_new;
    state.eta_scalar = eta;
    state.eta = SmallMat::scalar(s, eta);
    state.k += 1;
    Ok(SmoothStepResult {
        x_next,
        r_next,
        eta_norm: eta.abs() * T::from_count(s).sqrt(),
    })
}

/// The three cross-interactive schemes behind one entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirsScheme {
    Underlying,
    Orthonormalized,
    Global,
}

impl CirsScheme {
    pub fn step<T: Scalar, A: LinearOperator<T> + ?Sized>(
        self,
        state: &mut SmootherState<T>,
        p_tilde: &Block<T>,
        a: &A,
    ) -> Result<SmoothStepResult<T>> {
        match self {
            CirsScheme::Underlying => cirs_underlying_step(state, p_tilde, a),
            CirsScheme::Orthonormalized => cirs_ortho_step(state, p_tilde, a),
            CirsScheme::Global => gl_cirs_step(state, p_tilde, a),
        }
    }
}
