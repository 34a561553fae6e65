//! Residual-gap measurement and rounding-error bound evaluation.
//!
//! The residual gap of a pair `(X_k, R_k)` is `G = (B − A X_k) − R_k`, the
//! drift between the explicitly computed and the recursively updated
//! residual. It limits the attainable accuracy through
//! `‖G‖ − ‖R‖ ≤ ‖B − A X‖ ≤ ‖G‖ + ‖R‖`.

mod bounds;
mod inverse_norm;
mod tau;

pub use bounds::{
    bound_appendix, bound_thm22, bound_thm41, check_thm41_assumptions, gamma, gamma_tilde,
    BoundInputs, OrthoMethod, StepNorms, DEFAULT_GAMMA_TILDE_C,
};
pub use inverse_norm::{estimate_inverse_norm, BandedLu, DEFAULT_INVERSE_POWER_ITERS};
pub use tau::{tau_sequence, TauReport};

use thiserror::Error;

use crate::error::{LinalgError, Result};
use crate::linalg::{Block, CsrMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Norms and gaps of one solver iteration. Optional fields are `None` for
/// variants without a smoothed sequence, or when the measurement cadence
/// skipped this iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceRecord {
    pub k: usize,
    /// Cumulative multiplications by `A` inside the iteration (setup and
    /// diagnostics excluded).
    pub spmm_count: usize,
    /// `‖R_k‖ / ‖B‖`.
    pub rel_r: f64,
    /// `‖S_k‖ / ‖B‖`.
    pub rel_s: Option<f64>,
    /// `‖B − A X_k‖ / ‖B‖`.
    pub true_rel_r: Option<f64>,
    /// `‖B − A Y_k‖ / ‖B‖`.
    pub true_rel_s: Option<f64>,
    pub norm_x: f64,
    pub norm_y: Option<f64>,
    /// `‖(B − A X_k) − R_k‖`.
    pub gap_r: Option<f64>,
    /// `‖(B − A Y_k) − S_k‖`.
    pub gap_s: Option<f64>,
    /// `‖Q̂‖` of the Q-factor used in the step that produced this record.
    pub q_norm: Option<f64>,
    /// `‖Q̂ᵀQ̂ − I‖` of the same Q-factor.
    pub q_departure: Option<f64>,
}

/// `‖G‖ − ‖R‖ ≤ ‖B − AX‖ ≤ ‖G‖ + ‖R‖` up to `4ε` relative, all in the same units.
pub fn trr_sandwich(true_res: f64, rec_res: f64, gap: f64) -> bool {
    let slack = 4.0 * f64::EPSILON * (true_res + rec_res + gap);
    true_res <= gap + rec_res + slack && gap - rec_res <= true_res + slack
}

/// Checks the sandwich for every sequence of `record` given `‖B‖`.
pub fn record_satisfies_trr(record: &ConvergenceRecord, norm_b: f64) -> bool {
    let check = |t: Option<f64>, r: Option<f64>, g: Option<f64>| match (t, r, g) {
        (Some(t), Some(r), Some(g)) => trr_sandwich(t * norm_b, r * norm_b, g),
        _ => true,
    };
    check(record.true_rel_r, Some(record.rel_r), record.gap_r)
        && check(record.true_rel_s, record.rel_s, record.gap_s)
}

/// `‖(B − A X) − R‖`, using one explicit multiplication by `A`.
pub fn residual_gap<T: Scalar>(a: &CsrMatrix<T>, b: &Block<T>, x: &Block<T>, r: &Block<T>) -> Result<T> {
    let true_res = true_residual(a, b, x)?;
    Ok(true_res.sub(r)?.frobenius_norm())
}

/// `B − A X`.
pub fn true_residual<T: Scalar>(a: &CsrMatrix<T>, b: &Block<T>, x: &Block<T>) -> Result<Block<T>> {
    if b.shape() != x.shape() {
        return Err(LinalgError::mismatch(
            "true_residual",
            format!("{}x{}", b.nrows(), b.ncols()),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    b.sub(&a.spmm(x)?)
}
