//! Convergence-history CSV files.
//!
//! Layout (schema version 1):
//!
//! ```text
//! # blcirs-history v1; solver=bl-cirs-ortho; n=961; s=16; seed=0; norm_b=...
//! k,spmm_count,rel_r,rel_s,true_rel_r,true_rel_s,norm_x,norm_y,gap_r,gap_s,q_norm,q_departure
//! 0,0,1,1,1,1,0,0,0,0,,
//! ```
//!
//! The first line carries `key=value` metadata separated by `;`. Relative
//! quantities are divided by `‖B‖_F`; norms and gaps are absolute Frobenius
//! norms. Fields that do not apply to a solver are left empty.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use blcirs::diagnostics::ConvergenceRecord;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAGIC: &str = "blcirs-history";

pub const COLUMNS: [&str; 12] = [
    "k",
    "spmm_count",
    "rel_r",
    "rel_s",
    "true_rel_r",
    "true_rel_s",
    "norm_x",
    "norm_y",
    "gap_r",
    "gap_s",
    "q_norm",
    "q_departure",
];

/// Columns a reader cannot do without.
const REQUIRED: [&str; 4] = ["k", "spmm_count", "rel_r", "norm_x"];

/// Ordered `key=value` metadata from the comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryMeta(pub BTreeMap<String, String>);

impl HistoryMeta {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub meta: HistoryMeta,
    pub records: Vec<ConvergenceRecord>,
    /// Columns present in the file.
    pub columns: Vec<String>,
}

impl History {
    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_history<W: Write>(mut w: W, meta: &HistoryMeta, records: &[ConvergenceRecord]) -> Result<()> {
    let pairs: Vec<String> = meta
        .0
        .iter()
        .map(|(k, v)| {
            if k.contains(['=', ';', '\n']) || v.contains([';', '\n']) {
                bail!("metadata '{k}={v}' contains a reserved character");
            }
            Ok(format!("{k}={v}"))
        })
        .collect::<Result<_>>()?;
    let mut line = format!("# {MAGIC} v{SCHEMA_VERSION}");
    for p in pairs {
        line.push_str("; ");
        line.push_str(&p);
    }
    writeln!(w, "{line}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in records {
        out.write_record([
            r.k.to_string(),
            r.spmm_count.to_string(),
            fmt_f64(r.rel_r),
            opt(r.rel_s),
            opt(r.true_rel_r),
            opt(r.true_rel_s),
            fmt_f64(r.norm_x),
            opt(r.norm_y),
            opt(r.gap_r),
            opt(r.gap_s),
            opt(r.q_norm),
            opt(r.q_departure),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_history_file(path: &Path, meta: &HistoryMeta, records: &[ConvergenceRecord]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_history(std::io::BufWriter::new(f), meta, records).with_context(|| format!("writing {}", path.display()))
}

fn parse_meta(line: &str) -> Result<HistoryMeta> {
    let body = line
        .strip_prefix('#')
        .map(str::trim)
        .context("history must start with a '#' metadata line")?;
    let mut parts = body.split(';').map(str::trim);
    let head = parts.next().unwrap_or_default();
    let version = head
        .strip_prefix(MAGIC)
        .map(str::trim)
        .and_then(|v| v.strip_prefix('v'))
        .with_context(|| format!("not a {MAGIC} file: '{line}'"))?;
    let version: u32 = version.parse().with_context(|| format!("bad schema version '{version}'"))?;
    if version != SCHEMA_VERSION {
        bail!("unsupported schema version {version} (this build reads v{SCHEMA_VERSION})");
    }
    let mut meta = HistoryMeta::default();
    for p in parts.filter(|p| !p.is_empty()) {
        let (k, v) = p.split_once('=').with_context(|| format!("bad metadata entry '{p}'"))?;
        meta.set(k.trim(), v.trim());
    }
    Ok(meta)
}

pub fn read_history<R: Read>(r: R) -> Result<History> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = parse_meta(first.trim_end())?;
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for h in &headers {
        if !COLUMNS.contains(&h.as_str()) {
            bail!("unknown column '{h}'");
        }
    }
    for req in REQUIRED {
        if !headers.iter().any(|h| h == req) {
            bail!("missing required column '{req}'");
        }
    }
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let cols: Vec<Option<usize>> = COLUMNS.iter().map(|c| idx(c)).collect();
    let mut records = Vec::new();
    for (line, row) in csv.records().enumerate() {
        let row = row?;
        let line = line + 3;
        let field = |c: usize| -> Option<&str> { cols[c].and_then(|i| row.get(i)).map(str::trim).filter(|s| !s.is_empty()) };
        let num = |c: usize| -> Result<Option<f64>> {
            field(c)
                .map(|s| s.parse::<f64>().with_context(|| format!("line {line}: bad {} '{s}'", COLUMNS[c])))
                .transpose()
        };
        let int = |c: usize| -> Result<usize> {
            let s = field(c).with_context(|| format!("line {line}: empty {}", COLUMNS[c]))?;
            s.parse().with_context(|| format!("line {line}: bad {} '{s}'", COLUMNS[c]))
        };
        let need = |c: usize| -> Result<f64> { num(c)?.with_context(|| format!("line {line}: empty {}", COLUMNS[c])) };
        records.push(ConvergenceRecord {
            k: int(0)?,
            spmm_count: int(1)?,
            rel_r: need(2)?,
            rel_s: num(3)?,
            true_rel_r: num(4)?,
            true_rel_s: num(5)?,
            norm_x: need(6)?,
            norm_y: num(7)?,
            gap_r: num(8)?,
            gap_s: num(9)?,
            q_norm: num(10)?,
            q_departure: num(11)?,
        });
    }
    Ok(History {
        meta,
        records,
        columns: headers,
    })
}

pub fn read_history_file(path: &Path) -> Result<History> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_history(f).with_context(|| format!("reading {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ConvergenceRecord> {
        vec![
            ConvergenceRecord {
                k: 0,
                spmm_count: 0,
                rel_r: 1.0,
                rel_s: Some(1.0),
                true_rel_r: Some(1.0),
                norm_x: 0.0,
                norm_y: Some(0.0),
                gap_r: Some(0.0),
                ..Default::default()
            },
            ConvergenceRecord {
                k: 1,
                spmm_count: 2,
                rel_r: 0.1 + 0.2,
                rel_s: Some(1e-300),
                norm_x: 3.5,
                norm_y: Some(f64::MIN_POSITIVE),
                q_norm: Some(4.0),
                q_departure: Some(1.234e-15),
                ..Default::default()
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut meta = HistoryMeta::default();
        meta.set("solver", "bl-cirs-ortho").set("norm_b", fmt_f64(0.1));
        let mut buf = Vec::new();
        write_history(&mut buf, &meta, &sample()).unwrap();
        let h = read_history(&buf[..]).unwrap();
        assert_eq!(h.records, sample());
        assert_eq!(h.meta, meta);
        assert_eq!(h.meta.get_f64("norm_b"), Some(0.1));
    }

    #[test]
    fn rejects_other_versions_and_columns() {
        assert!(read_history("# blcirs-history v2\nk,spmm_count,rel_r,norm_x\n".as_bytes()).is_err());
        assert!(read_history("k,spmm_count\n".as_bytes()).is_err());
        let err = read_history("# blcirs-history v1\nk,spmm_count,rel_r\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("norm_x"));
        assert!(read_history("# blcirs-history v1\nk,spmm_count,rel_r,norm_x,extra\n".as_bytes()).is_err());
    }

    #[test]
    fn subset_of_columns_is_accepted() {
        let h = read_history("# blcirs-history v1; a=b\nk,spmm_count,rel_r,norm_x\n0,0,1,0\n1,2,0.5,1\n".as_bytes()).unwrap();
        assert_eq!(h.records.len(), 2);
        assert!(!h.has_column("gap_r"));
        assert_eq!(h.records[1].gap_r, None);
    }

    #[test]
    fn reserved_characters_in_metadata_rejected() {
        let mut meta = HistoryMeta::default();
        meta.set("matrix", "a;b");
        assert!(write_history(Vec::new(), &meta, &[]).is_err());
    }
}
