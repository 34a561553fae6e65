use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::IngestError;
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_header(line: &str) -> Result<Symmetry, IngestError> {
    let toks: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(IngestError::Header(format!("not a Matrix Market banner: '{line}'")));
    }
    if toks[1] != "matrix" {
        return Err(IngestError::Header(format!("unsupported object '{}'", toks[1])));
    }
    if toks[2] != "coordinate" {
        return Err(IngestError::Header(format!("unsupported format '{}'", toks[2])));
    }
    match toks[3].as_str() {
        "real" | "integer" => {}
        other => return Err(IngestError::Header(format!("unsupported field '{other}'"))),
    }
    match toks[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        "skew-symmetric" => Ok(Symmetry::SkewSymmetric),
        other => Err(IngestError::Header(format!("unsupported symmetry '{other}'"))),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a square coordinate matrix (real or integer; general, symmetric or
/// skew-symmetric). Symmetric storage is expanded and duplicates are summed.
pub fn parse_matrix_market<R: Read>(reader: R) -> Result<CsrMatrix<f64>, IngestError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let banner = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(IngestError::Header("empty input".into())),
    };
    let sym = parse_header(banner.trim())?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize, IngestError> {
                    toks.next()
                        .ok_or_else(|| parse_err(lineno, "size line needs rows, cols, nnz"))?
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad size field: {e}")))
                };
                let (r, c, nz) = (next()?, next()?, next()?);
                if r != c {
                    return Err(IngestError::NonSquare { rows: r, cols: c });
                }
                if r == 0 {
                    return Err(IngestError::Empty);
                }
                size = Some((r, c, nz));
                trip.reserve(if sym == Symmetry::General { nz } else { 2 * nz });
            }
            Some((n, _, nz)) => {
                if seen == nz {
                    return Err(parse_err(lineno, format!("more than the declared {nz} entries")));
                }
                let (i, j, v) = match (toks.next(), toks.next(), toks.next()) {
                    (Some(i), Some(j), Some(v)) => (i, j, v),
                    _ => return Err(parse_err(lineno, "entry needs row, col, value")),
                };
                let i: usize = i.parse().map_err(|e| parse_err(lineno, format!("bad row: {e}")))?;
                let j: usize = j.parse().map_err(|e| parse_err(lineno, format!("bad col: {e}")))?;
                let v: f64 = v.parse().map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(IngestError::IndexOutOfRange {
                        line: lineno,
                        row: i,
                        col: j,
                    });
                }
                let (i, j) = (i - 1, j - 1);
                trip.push((i, j, v));
                match sym {
                    Symmetry::General => {}
                    Symmetry::Symmetric if i != j => trip.push((j, i, v)),
                    Symmetry::SkewSymmetric if i != j => trip.push((j, i, -v)),
                    Symmetry::SkewSymmetric => {
                        return Err(parse_err(lineno, "diagonal entry in skew-symmetric matrix"))
                    }
                    Symmetry::Symmetric => {}
                }
                seen += 1;
            }
        }
    }
    let (n, _, nz) = size.ok_or_else(|| IngestError::Header("missing size line".into()))?;
    if seen != nz {
        return Err(IngestError::Parse {
            line: 0,
            msg: format!("declared {nz} entries, found {seen}"),
        });
    }
    CsrMatrix::from_triplets(n, &trip).map_err(|e| IngestError::Header(e.to_string()))
}

pub fn read_matrix_market_file(path: &Path) -> Result<CsrMatrix<f64>, IngestError> {
    let f = std::fs::File::open(path)?;
    parse_matrix_market(f)
}

/// Writes `a` in general coordinate form with shortest round-trip decimals.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix<f64>, mut w: W) -> Result<(), IngestError> {
    if a.n() == 0 {
        return Err(IngestError::Empty);
    }
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for i in 0..a.n() {
        for (j, v) in a.row(i) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}
