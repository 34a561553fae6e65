use super::{ConvergenceRecord, DiagnosticsError};

/// Default constant `c` in `γ̃_k = c·k·u`.
pub const DEFAULT_GAMMA_TILDE_C: f64 = 2.0;

/// Orthonormalization kernel assumed by the bound hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoMethod {
    Householder,
    Givens,
}

/// `γ_k = k u / (1 − k u)`, defined only for `k u < 1`.
pub fn gamma(k: usize, u: f64) -> Result<f64, DiagnosticsError> {
    let ku = k as f64 * u;
    if !(ku < 1.0) {
        return Err(DiagnosticsError::AssumptionViolated(format!(
            "gamma_{k} requires k*u < 1, got {ku:e}"
        )));
    }
    Ok(ku / (1.0 - ku))
}

/// `γ̃_k = c k u`.
pub fn gamma_tilde(k: usize, u: f64, c: f64) -> f64 {
    c * k as f64 * u
}

/// Per-step quantities entering the accumulated bound, for step `i` (from
/// iterate `i − 1` to iterate `i`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepNorms {
    /// `‖Q̂_{i−1}‖`.
    pub q_norm: Option<f64>,
    /// `‖ΔI_{i−1}‖`, measured as `‖Q̂ᵀQ̂ − I‖`.
    pub q_departure: Option<f64>,
    pub x_prev: f64,
    pub x: f64,
    pub r: f64,
}

/// Everything the bound evaluators need after `k` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub k: usize,
    pub s: usize,
    /// Maximum nonzeros per row of `A`.
    pub m: usize,
    pub u: f64,
    pub norm_a: f64,
    /// `max_{0<i≤k} ‖X_i‖` (zero when `k = 0`).
    pub max_x: f64,
    /// `max_{0<i≤k} ‖R_i‖`.
    pub max_r: f64,
    /// `max_{0≤i≤k} ‖R_i‖`.
    pub max_r_incl0: f64,
    pub steps: Vec<StepNorms>,
    pub c: f64,
}

impl BoundInputs {
    /// Builds the inputs from iterate norms `xs[i] = ‖X_i‖`, `rs[i] = ‖R_i‖`
    /// for `i = 0..=k` and the Q-factor norms of steps `1..=k`.
    pub fn from_history(
        s: usize,
        m: usize,
        u: f64,
        norm_a: f64,
        xs: &[f64],
        rs: &[f64],
        qs: &[(Option<f64>, Option<f64>)],
    ) -> Result<Self, DiagnosticsError> {
        if xs.is_empty() || xs.len() != rs.len() {
            return Err(DiagnosticsError::MissingData(format!(
                "need matching non-empty norm histories, got {} and {}",
                xs.len(),
                rs.len()
            )));
        }
        let k = xs.len() - 1;
        if qs.len() != k {
            return Err(DiagnosticsError::MissingData(format!(
                "expected {k} step entries, got {}",
                qs.len()
            )));
        }
        let max_x = xs[1..].iter().copied().fold(0.0, f64::max);
        let max_r = rs[1..].iter().copied().fold(0.0, f64::max);
        let max_r_incl0 = rs.iter().copied().fold(0.0, f64::max);
        let steps = (1..=k)
            .map(|i| StepNorms {
                q_norm: qs[i - 1].0,
                q_departure: qs[i - 1].1,
                x_prev: xs[i - 1],
                x: xs[i],
                r: rs[i],
            })
            .collect();
        Ok(Self {
            k,
            s,
            m,
            u,
            norm_a,
            max_x,
            max_r,
            max_r_incl0,
            steps,
            c: DEFAULT_GAMMA_TILDE_C,
        })
    }

    /// Builds the inputs for the primary `(X, R)` sequence from `records[0..=k]`.
    pub fn from_records_primary(
        records: &[ConvergenceRecord],
        norm_b: f64,
        s: usize,
        m: usize,
        u: f64,
        norm_a: f64,
    ) -> Result<Self, DiagnosticsError> {
        let xs: Vec<f64> = records.iter().map(|r| r.norm_x).collect();
        let rs: Vec<f64> = records.iter().map(|r| r.rel_r * norm_b).collect();
        let qs: Vec<_> = records.iter().skip(1).map(|r| (r.q_norm, r.q_departure)).collect();
        Self::from_history(s, m, u, norm_a, &xs, &rs, &qs)
    }

    /// Builds the inputs for the smoothed `(Y, S)` sequence from `records[0..=k]`.
    pub fn from_records_smoothed(
        records: &[ConvergenceRecord],
        norm_b: f64,
        s: usize,
        m: usize,
        u: f64,
        norm_a: f64,
    ) -> Result<Self, DiagnosticsError> {
        let mut xs = Vec::with_capacity(records.len());
        let mut rs = Vec::with_capacity(records.len());
        for r in records {
            match (r.norm_y, r.rel_s) {
                (Some(y), Some(sr)) => {
                    xs.push(y);
                    rs.push(sr * norm_b);
                }
                _ => {
                    return Err(DiagnosticsError::MissingData(format!(
                        "record {} has no smoothed sequence",
                        r.k
                    )))
                }
            }
        }
        let qs: Vec<_> = records.iter().skip(1).map(|r| (r.q_norm, r.q_departure)).collect();
        Self::from_history(s, m, u, norm_a, &xs, &rs, &qs)
    }
}

/// Gap bound of the unsmoothed block method:
/// `k(3 + 4s√s + 2m√s) u ‖A‖ max_{0<j≤k}‖X_j‖ + 3(k+1) u max_{0≤j≤k}‖R_j‖`.
pub fn bound_thm22(inp: &BoundInputs) -> f64 {
    let k = inp.k as f64;
    let s = inp.s as f64;
    let m = inp.m as f64;
    let rs = s.sqrt();
    k * (3.0 + 4.0 * s * rs + 2.0 * m * rs) * inp.u * inp.norm_a * inp.max_x
        + 3.0 * (k + 1.0) * inp.u * inp.max_r_incl0
}

/// Gap bound of the orthonormalized smoother:
/// `(8√s γ_{m+3s} + γ₁) k ‖A‖ max‖X_i‖ + k γ₁ max‖R_i‖`.
pub fn bound_thm41(inp: &BoundInputs) -> Result<f64, DiagnosticsError> {
    let g = gamma(inp.m + 3 * inp.s, inp.u)?;
    let g1 = gamma(1, inp.u)?;
    let k = inp.k as f64;
    let rs = (inp.s as f64).sqrt();
    Ok((8.0 * rs * g + g1) * k * inp.norm_a * inp.max_x + k * g1 * inp.max_r)
}

/// Whether the hypothesis on `γ̃` behind [`bound_thm41`] holds for an `n × s`
/// problem orthonormalized with `method`.
pub fn check_thm41_assumptions(n: usize, s: usize, u: f64, c: f64, method: OrthoMethod) -> bool {
    let n = n as f64;
    let sf = s as f64;
    let rs = sf.sqrt();
    let arg = match method {
        OrthoMethod::Householder => (n + 1.0) * (rs + 1.0) * sf + 1.0,
        OrthoMethod::Givens => (n + 2.0 * (sf - 1.0)) * (rs + 1.0) + 1.0,
    };
    c * arg * u < 0.5
}

/// Accumulated bound driven by the measured Q-factor norms:
/// `Σ_i 2γ_{m+2s}‖A‖‖Q̂_{i−1}‖ / (1 − γ_s‖Q̂_{i−1}‖ − ‖ΔI_{i−1}‖) · (‖X_{i−1}‖ + ‖X_i‖)
///  + γ₁‖A‖ Σ‖X_i‖ + γ₁ Σ‖R_i‖`.
pub fn bound_appendix(inp: &BoundInputs) -> Result<f64, DiagnosticsError> {
    let g_m2s = gamma(inp.m + 2 * inp.s, inp.u)?;
    let g_s = gamma(inp.s, inp.u)?;
    let g1 = gamma(1, inp.u)?;
    let mut sum = 0.0;
    let mut sum_x = 0.0;
    let mut sum_r = 0.0;
    for (idx, st) in inp.steps.iter().enumerate() {
        let i = idx + 1;
        let (q, di) = match (st.q_norm, st.q_departure) {
            (Some(q), Some(d)) => (q, d),
            _ => {
                return Err(DiagnosticsError::MissingData(format!(
                    "step {i} has no Q-factor norms"
                )))
            }
        };
        let denom = 1.0 - g_s * q - di;
        if !(denom > 0.0) {
            return Err(DiagnosticsError::AssumptionViolated(format!(
                "step {i}: 1 - gamma_s*|Q| - |dI| = {denom:e} is not positive"
            )));
        }
        sum += 2.0 * g_m2s * inp.norm_a * q / denom * (st.x_prev + st.x);
        sum_x += st.x;
        sum_r += st.r;
    }
    Ok(sum + g1 * inp.norm_a * sum_x + g1 * sum_r)
}
