//! Per-iteration comparison of measured residual gaps against the
//! rounding-error bounds.

use std::io::Write;

use anyhow::{bail, Result};
use blcirs::diagnostics::{
    bound_appendix, bound_thm22, bound_thm41, BoundInputs, ConvergenceRecord, DiagnosticsError,
};
use blcirs::CsrMatrix;

use crate::history::fmt_f64;

pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub k: usize,
    pub gap: Option<f64>,
    pub thm22: f64,
    pub thm41: Result<f64, String>,
    pub appendix: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `"smoothed"` for `(Y, S)`, `"primary"` for `(X, R)`.
    pub sequence: &'static str,
    pub s: usize,
    pub m: usize,
    pub norm_a: f64,
    pub rows: Vec<BoundRow>,
    pub notes: Vec<String>,
}

fn err_text(e: DiagnosticsError) -> String {
    match e {
        DiagnosticsError::AssumptionViolated(m) => format!("assumption violated: {m}"),
        DiagnosticsError::MissingData(m) => format!("missing data: {m}"),
        other => other.to_string(),
    }
}

impl BoundReport {
    /// `Some(true)` when the bound is at least the gap wherever both exist;
    /// `None` when no gap was measured.
    pub fn thm41_dominates(&self) -> Option<bool> {
        let mut seen = false;
        for r in &self.rows {
            if let (Some(g), Ok(b)) = (r.gap, &r.thm41) {
                seen = true;
                if g > *b {
                    return Some(false);
                }
            }
        }
        seen.then_some(true)
    }

    pub fn appendix_violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| matches!(&r.appendix, Err(e) if e.starts_with("assumption")))
            .map(|r| r.k)
            .collect()
    }

    pub fn verdict_text(&self, name: &str) -> String {
        let mut out = format!(
            "{name}: {} sequence, s = {}, m = {}, |A|_F = {:.6e}\n",
            self.sequence, self.s, self.m, self.norm_a
        );
        let verdict = match self.thm41_dominates() {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a (no measured gap)",
        };
        out.push_str(&format!("thm41 dominates measured gap at every k: {verdict}\n"));
        let v = self.appendix_violations();
        if !v.is_empty() {
            let shown: Vec<String> = v.iter().take(10).map(usize::to_string).collect();
            let more = if v.len() > 10 { ", ..." } else { "" };
            out.push_str(&format!(
                "appendix bound assumption violated at k = {}{more}\n",
                shown.join(", ")
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// Evaluates all three bounds at every recorded iteration. Records must be
/// consecutive from `k = 0`.
pub fn evaluate_bounds(records: &[ConvergenceRecord], norm_b: f64, s: usize, a: &CsrMatrix<f64>) -> Result<BoundReport> {
    if records.is_empty() {
        bail!("history has no records");
    }
    for (i, r) in records.iter().enumerate() {
        if r.k != i {
            bail!("records must be consecutive from k = 0; found k = {} at row {i}", r.k);
        }
    }
    let smoothed = records.iter().all(|r| r.rel_s.is_some() && r.norm_y.is_some());
    let m = a.max_row_nnz();
    let norm_a = a.frobenius_norm();
    let u = UNIT_ROUNDOFF;
    let mut notes = Vec::new();
    let mut rows = Vec::with_capacity(records.len());
    for k in 0..records.len() {
        let head = &records[..=k];
        let inp = if smoothed {
            BoundInputs::from_records_smoothed(head, norm_b, s, m, u, norm_a)
        } else {
            BoundInputs::from_records_primary(head, norm_b, s, m, u, norm_a)
        }?;
        let rec = &records[k];
        rows.push(BoundRow {
            k,
            gap: if smoothed { rec.gap_s } else { rec.gap_r },
            thm22: bound_thm22(&inp),
            thm41: bound_thm41(&inp).map_err(err_text),
            appendix: bound_appendix(&inp).map_err(err_text),
        });
    }
    if rows.iter().all(|r| r.gap.is_none()) {
        notes.push("no measured gaps: thm41 comparison needs gap_r/gap_s (record with --record-gap-every >= 1)".into());
    }
    if records.len() > 1 && records[1..].iter().any(|r| r.q_norm.is_none() || r.q_departure.is_none()) {
        notes.push("appendix bound needs q_norm and q_departure at every step; this solver does not record them".into());
    }
    Ok(BoundReport {
        sequence: if smoothed { "smoothed" } else { "primary" },
        s,
        m,
        norm_a,
        rows,
        notes,
    })
}

pub fn write_bounds_csv<W: Write>(w: W, rep: &BoundReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "gap", "bound_thm22", "bound_thm41", "bound_appendix", "status"])?;
    for r in &rep.rows {
        let mut status = Vec::new();
        let thm41 = match &r.thm41 {
            Ok(v) => fmt_f64(*v),
            Err(e) => {
                status.push(format!("thm41 {e}"));
                String::new()
            }
        };
        let app = match &r.appendix {
            Ok(v) => fmt_f64(*v),
            Err(e) => {
                status.push(format!("appendix {e}"));
                String::new()
            }
        };
        out.write_record([
            r.k.to_string(),
            r.gap.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.thm22),
            thm41,
            app,
            if status.is_empty() { "ok".into() } else { status.join("; ") },
        ])?;
    }
    out.flush()?;
    Ok(())
}
