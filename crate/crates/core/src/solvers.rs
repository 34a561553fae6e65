//! Block BiCGSTAB with QR-orthonormalized search directions, optionally
//! coupled to a residual smoother.
//!
//! Five variants share one driver:
//!
//! | number | variant | smoothing |
//! |---|---|---|
//! | 1 | [`Variant::NoSmoothing`] | none |
//! | 2 | [`Variant::BlSrs`] | simple residual smoothing as an observer |
//! | 3 | [`Variant::BlCirsUnderlying`] | underlying block CIRS |
//! | 4 | [`Variant::BlCirsOrtho`] | block CIRS with orthonormalization |
//! | 5 | [`Variant::GlCirs`] | global CIRS |
//!
//! Each iteration multiplies by `A` exactly twice. Forming `R_0 = B − A X_0`
//! (skipped when `X_0 = 0`) and `Aᵀ R̃_0` are setup work and counted
//! separately; the explicit residuals behind the gap diagnostics are not
//! counted at all.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::diagnostics::ConvergenceRecord;
use crate::error::LinalgError;
use crate::linalg::{Block, CountingOperator, CsrMatrix, LinearOperator};
use crate::qr::{orthonormality_departure, qf, right_solve, solve_small};
use crate::scalar::Scalar;
use crate::smoothing::{srs_step, CirsScheme, SmootherState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    NoSmoothing,
    BlSrs,
    BlCirsUnderlying,
    BlCirsOrtho,
    GlCirs,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::NoSmoothing,
        Variant::BlSrs,
        Variant::BlCirsUnderlying,
        Variant::BlCirsOrtho,
        Variant::GlCirs,
    ];

    pub fn number(self) -> u8 {
        match self {
            Variant::NoSmoothing => 1,
            Variant::BlSrs => 2,
            Variant::BlCirsUnderlying => 3,
            Variant::BlCirsOrtho => 4,
            Variant::GlCirs => 5,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get((n as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::NoSmoothing => "none",
            Variant::BlSrs => "bl-srs",
            Variant::BlCirsUnderlying => "bl-cirs",
            Variant::BlCirsOrtho => "bl-cirs-ortho",
            Variant::GlCirs => "gl-cirs",
        }
    }

    /// Whether the variant maintains a smoothed sequence `(Y, S)`.
    pub fn is_smoothed(self) -> bool {
        self != Variant::NoSmoothing
    }

    fn scheme(self) -> Option<CirsScheme> {
        match self {
            Variant::BlCirsUnderlying => Some(CirsScheme::Underlying),
            Variant::BlCirsOrtho => Some(CirsScheme::Orthonormalized),
            Variant::GlCirs => Some(CirsScheme::Global),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    /// Accepts the solver number (`1`–`5`) or the variant name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if let Ok(n) = t.parse::<u8>() {
            return Self::from_number(n).ok_or_else(|| format!("solver number {n} is not in 1..=5"));
        }
        let alias = match t.as_str() {
            "none" | "no-smoothing" | "nosmoothing" | "bicgstabpq" => Variant::NoSmoothing,
            "bl-srs" | "srs" | "blsrs" => Variant::BlSrs,
            "bl-cirs" | "cirs" | "blcirs" | "bl-cirs-underlying" => Variant::BlCirsUnderlying,
            "bl-cirs-ortho" | "cirs-ortho" | "ortho" | "blcirs-ortho" => Variant::BlCirsOrtho,
            "gl-cirs" | "global" | "glcirs" => Variant::GlCirs,
            _ => return Err(format!("unknown solver '{s}'")),
        };
        Ok(alias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub variant: Variant,
    /// Stop once the monitored relative residual drops below this.
    pub tol: f64,
    /// Defaults to the problem dimension.
    pub max_iter: Option<usize>,
    /// Seed used by callers that generate `B`; the iteration itself is
    /// deterministic and draws no random numbers.
    pub seed: u64,
    /// Measure explicit residuals and gaps every this many iterations
    /// (0 disables them except for the final iterate).
    pub record_gap_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            variant: Variant::NoSmoothing,
            tol: 1e-15,
            max_iter: None,
            seed: 0,
            record_gap_every: 1,
        }
    }
}

impl SolverOptions {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIter,
    /// The iteration could not continue; `iteration` is the step that failed.
    Breakdown { iteration: usize, cause: LinalgError },
}

impl RunStatus {
    pub fn converged(&self) -> bool {
        matches!(self, RunStatus::Converged)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub variant: Variant,
    /// `Y` for smoothed variants, `X` otherwise.
    pub x_final: Block<T>,
    /// One record per completed iteration, starting with `k = 0`.
    pub records: Vec<ConvergenceRecord>,
    pub status: RunStatus,
    pub iterations: usize,
    /// Multiplications by `A` (or `Aᵀ`) spent before the first iteration.
    pub setup_spmm: usize,
    /// `‖B − A x_final‖ / ‖B‖`.
    pub final_true_rel: f64,
    pub norm_b: f64,
    pub elapsed: Duration,
    pub warnings: Vec<String>,
}

impl<T> RunResult<T> {
    pub fn spmm_count(&self) -> usize {
        self.records.last().map_or(0, |r| r.spmm_count)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `ω = ⟨R', T⟩_F / ⟨T, T⟩_F`. Returns a breakdown when `⟨T, T⟩ = 0`; the
/// flag reports `ω = 0`, after which the iteration stagnates.
pub fn compute_omega<T: Scalar>(r_prime: &Block<T>, t: &Block<T>) -> Result<(T, bool), LinalgError> {
    let tt = t.frobenius_inner(t)?;
    if tt == T::zero() || !tt.is_finite() {
        return Err(LinalgError::Breakdown {
            column: 0,
            pivot: tt.as_f64(),
            threshold: 0.0,
        });
    }
    let omega = r_prime.frobenius_inner(t)? / tt;
    if !omega.is_finite() {
        return Err(LinalgError::NonFinite { op: "compute_omega" });
    }
    Ok((omega, omega == T::zero()))
}

struct Iterate<T> {
    x: Block<T>,
    r: Block<T>,
    p: Block<T>,
    r_prime: Block<T>,
    omega: T,
    smoother: Option<SmootherState<T>>,
    q_used: Option<Block<T>>,
}

/// Solves `A X = B` from `X_0` with shadow residual `R̃_0` (defaults to `R_0`).
pub fn bicgstab_pq_run<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &Block<T>,
    x0: &Block<T>,
    r0_shadow: Option<&Block<T>>,
    opts: &SolverOptions,
) -> Result<RunResult<T>, SolverError> {
    let start = Instant::now();
    let n = a.n();
    let (bn, s) = b.shape();
    if bn != n || x0.shape() != b.shape() {
        return Err(SolverError::InvalidInput(format!(
            "A is {n}x{n}, B is {bn}x{s}, X0 is {}x{}",
            x0.nrows(),
            x0.ncols()
        )));
    }
    if s == 0 || s > n {
        return Err(SolverError::InvalidInput(format!(
            "block size {s} must satisfy 1 <= s <= n = {n}"
        )));
    }
    if let Some(rs) = r0_shadow {
        if rs.shape() != b.shape() {
            return Err(SolverError::InvalidInput("shadow residual shape differs from B".into()));
        }
    }
    if !(opts.tol > 0.0) {
        return Err(SolverError::InvalidInput(format!("tolerance {} must be positive", opts.tol)));
    }
    if !b.is_finite() || !x0.is_finite() {
        return Err(SolverError::InvalidInput("non-finite B or X0".into()));
    }
    let variant = opts.variant;
    let max_iter = opts.max_iter.unwrap_or(n);
    let norm_b = b.frobenius_norm().as_f64();

    let mut setup_spmm = 0;
    let r0 = if x0.is_zero() {
        b.clone()
    } else {
        setup_spmm += 1;
        b.sub(&a.spmm(x0)?)?
    };
    if norm_b == 0.0 {
        let rec = ConvergenceRecord {
            k: 0,
            rel_r: 0.0,
            rel_s: variant.is_smoothed().then_some(0.0),
            norm_x: 0.0,
            norm_y: variant.is_smoothed().then_some(0.0),
            ..Default::default()
        };
        return Ok(RunResult {
            variant,
            x_final: Block::zeros(n, s),
            records: vec![rec],
            status: RunStatus::Converged,
            iterations: 0,
            setup_spmm,
            final_true_rel: 0.0,
            norm_b,
            elapsed: start.elapsed(),
            warnings: vec!["B = 0; returning X = 0".into()],
        });
    }
    let r_shadow = r0_shadow.cloned().unwrap_or_else(|| r0.clone());
    let z_shadow = a.spmm_transpose(&r_shadow)?;
    setup_spmm += 1;

    let op = CountingOperator::new(a);
    let mut it = Iterate {
        x: x0.clone(),
        r: r0.clone(),
        p: r0.clone(),
        r_prime: Block::zeros(n, s),
        omega: T::zero(),
        smoother: if variant.is_smoothed() {
            Some(SmootherState::new(x0, &r0)?)
        } else {
            None
        },
        q_used: None,
    };
    let mut warnings = Vec::new();
    let mut records = vec![make_record(a, b, norm_b, 0, 0, &it, variant, true)?];
    let mut status = RunStatus::MaxIter;
    let mut iterations = 0;

    for k in 0..=max_iter {
        let monitored = match &it.smoother {
            Some(sm) => sm.s_res.frobenius_norm().as_f64() / norm_b,
            None => it.r.frobenius_norm().as_f64() / norm_b,
        };
        if monitored < opts.tol {
            status = RunStatus::Converged;
            break;
        }
        if k == max_iter {
            break;
        }
        match step(&op, &r_shadow, &z_shadow, &mut it, variant) {
            Ok(omega_zero) => {
                if omega_zero {
                    warnings.push(format!("omega = 0 at iteration {}", k + 1));
                }
            }
            Err(cause) => {
                status = RunStatus::Breakdown {
                    iteration: k + 1,
                    cause,
                };
                break;
            }
        }
        iterations = k + 1;
        let measure = opts.record_gap_every > 0 && iterations % opts.record_gap_every == 0;
        records.push(make_record(a, b, norm_b, iterations, op.count(), &it, variant, measure)?);
    }

    if records.last().is_some_and(|r| r.true_rel_r.is_none()) {
        let last = make_record(a, b, norm_b, iterations, op.count(), &it, variant, true)?;
        *records.last_mut().expect("non-empty") = last;
    }

    let x_final = match &it.smoother {
        Some(sm) => sm.y.clone(),
        None => it.x.clone(),
    };
    let final_true_rel = b.sub(&a.spmm(&x_final)?)?.frobenius_norm().as_f64() / norm_b;
    Ok(RunResult {
        variant,
        x_final,
        records,
        status,
        iterations,
        setup_spmm,
        final_true_rel,
        norm_b,
        elapsed: start.elapsed(),
        warnings,
    })
}

/// One iteration. Returns whether `ω` vanished.
fn step<T: Scalar>(
    op: &CountingOperator<'_, T>,
    r_shadow: &Block<T>,
    z_shadow: &Block<T>,
    it: &mut Iterate<T>,
    variant: Variant,
) -> Result<bool, LinalgError> {
    let q = qf(&it.p)?;
    let sigma = z_shadow.gram(&q)?;
    let alpha = solve_small(&sigma, &r_shadow.gram(&it.r)?)?;

    let (x_prime, r_prime, v_prime, q_used) = match variant.scheme() {
        None => {
            let aq = op.apply(&q)?;
            let x_prime = it.x.add(&q.mul_small(&alpha)?)?;
            let r_prime = it.r.sub(&aq.mul_small(&alpha)?)?;
            if let Some(sm) = it.smoother.as_mut() {
                srs_step(sm, &x_prime, &r_prime)?;
            }
            (x_prime, r_prime, aq, Some(q.clone()))
        }
        Some(scheme) => {
            let p_tilde = it.r_prime.scale(it.omega).add(&q.mul_small(&alpha)?)?;
            let sm = it.smoother.as_mut().expect("smoothed variant has a smoother");
            let out = scheme.step(sm, &p_tilde, op)?;
            let v_prime = right_solve(&it.r.sub(&out.r_next)?, &alpha)?;
            let q_used = (scheme == CirsScheme::Orthonormalized).then(|| sm.q_tilde.clone());
            (out.x_next, out.r_next, v_prime, q_used)
        }
    };

    let t = op.apply(&r_prime)?;
    let (omega, omega_zero) = compute_omega(&r_prime, &t)?;
    let x = x_prime.add_scaled(&r_prime, omega)?;
    let r = r_prime.add_scaled(&t, -omega)?;
    let beta = solve_small(&sigma, &r_shadow.gram(&t)?)?;
    let dir = q.add_scaled(&v_prime, -omega)?;
    let p = r.sub(&dir.mul_small(&beta)?)?;
    if !x.is_finite() || !r.is_finite() || !p.is_finite() {
        return Err(LinalgError::NonFinite { op: "bicgstab_pq step" });
    }
    it.x = x;
    it.r = r;
    it.p = p;
    it.r_prime = r_prime;
    it.omega = omega;
    it.q_used = q_used;
    Ok(omega_zero)
}

#[allow(clippy::too_many_arguments)]
fn make_record<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &Block<T>,
    norm_b: f64,
    k: usize,
    spmm_count: usize,
    it: &Iterate<T>,
    variant: Variant,
    measure: bool,
) -> Result<ConvergenceRecord, LinalgError> {
    let rel = |blk: &Block<T>| blk.frobenius_norm().as_f64() / norm_b;
    let mut rec = ConvergenceRecord {
        k,
        spmm_count,
        rel_r: rel(&it.r),
        norm_x: it.x.frobenius_norm().as_f64(),
        ..Default::default()
    };
    if measure {
        let tr = b.sub(&a.spmm(&it.x)?)?;
        rec.true_rel_r = Some(rel(&tr));
        rec.gap_r = Some(tr.sub(&it.r)?.frobenius_norm().as_f64());
    }
    if let Some(sm) = &it.smoother {
        rec.rel_s = Some(rel(&sm.s_res));
        rec.norm_y = Some(sm.y.frobenius_norm().as_f64());
        if measure {
            let ts = b.sub(&a.spmm(&sm.y)?)?;
            rec.true_rel_s = Some(rel(&ts));
            rec.gap_s = Some(ts.sub(&sm.s_res)?.frobenius_norm().as_f64());
        }
    }
    let track_q = matches!(
        variant,
        Variant::NoSmoothing | Variant::BlSrs | Variant::BlCirsOrtho
    );
    if track_q {
        if let Some(q) = &it.q_used {
            rec.q_norm = Some(q.frobenius_norm().as_f64());
            rec.q_departure = Some(orthonormality_departure(q).as_f64());
        }
    }
    Ok(rec)
}

/// Runs every configuration from `X_0 = 0` with `R̃_0 = R_0`, concurrently.
/// Results come back in input order and do not depend on scheduling.
pub fn run_suite<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &Block<T>,
    configs: &[SolverOptions],
) -> Vec<Result<RunResult<T>, SolverError>> {
    let x0 = Block::zeros(b.nrows(), b.ncols());
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|opts| {
                let x0 = &x0;
                scope.spawn(move || bicgstab_pq_run(a, b, x0, None, opts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}
