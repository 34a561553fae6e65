use super::{ConvergenceRecord, DiagnosticsError};

/// `τ_k = ‖A⁻¹‖ ‖S_k‖ / ‖B‖` per record, with the indices `k` at which
/// `|‖Y_{k+1}‖ − ‖Y_k‖| / ‖B‖ ≤ 2τ_k` fails.
#[derive(Debug, Clone, PartialEq)]
pub struct TauReport {
    pub taus: Vec<f64>,
    pub violations: Vec<usize>,
}

/// Evaluates the `τ` sequence. Records without a smoothed sequence fall back
/// to `(X, R)`.
pub fn tau_sequence(
    records: &[ConvergenceRecord],
    norm_a_inv: f64,
    norm_b: f64,
) -> Result<TauReport, DiagnosticsError> {
    if !(norm_b > 0.0) {
        return Err(DiagnosticsError::AssumptionViolated(format!(
            "tau needs a positive right-hand-side norm, got {norm_b:e}"
        )));
    }
    let taus: Vec<f64> = records
        .iter()
        .map(|r| norm_a_inv * r.rel_s.unwrap_or(r.rel_r))
        .collect();
    let ny: Vec<f64> = records.iter().map(|r| r.norm_y.unwrap_or(r.norm_x)).collect();
    let mut violations = Vec::new();
    for k in 0..records.len().saturating_sub(1) {
        let diff = (ny[k + 1] - ny[k]).abs() / norm_b;
        let slack = 4.0 * f64::EPSILON * (ny[k + 1] + ny[k]) / norm_b;
        if diff > 2.0 * taus[k] + slack {
            violations.push(records[k].k);
        }
    }
    Ok(TauReport { taus, violations })
}
