//! libsvm text format: `label idx:val idx:val ...` with 1-based, strictly
//! increasing indices per line.

use std::io::{BufRead, Write};

use crate::data::{CovariateMatrix, RawMatrix, ResponseVector, SparseVec};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Reads a libsvm stream without range-checking values; d = max index seen.
pub fn load_libsvm_raw<F: Scalar, R: BufRead>(reader: R) -> Result<(RawMatrix<F>, ResponseVector<F>)> {
    let mut y: Vec<F> = Vec::new();
    let mut rows: Vec<Vec<(u32, F)>> = Vec::new();
    let mut d = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label = parts
            .next()
            .ok_or_else(|| parse_err(lineno, "missing label"))?;
        let label: f64 = label
            .parse()
            .map_err(|_| parse_err(lineno, &format!("bad label '{label}'")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "non-finite label"));
        }

        let mut row: Vec<(u32, F)> = Vec::new();
        let mut prev_idx = 0u32; // 1-based; 0 means none yet
        for tok in parts {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, &format!("expected idx:val, got '{tok}'")))?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| parse_err(lineno, &format!("bad index '{idx}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if idx <= prev_idx {
                return Err(parse_err(lineno, "indices must strictly increase"));
            }
            prev_idx = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, &format!("bad value '{val}'")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, "non-finite value"));
            }
            d = d.max(idx as usize);
            row.push((idx - 1, F::c(val)));
        }
        y.push(F::c(label));
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::NoInstances);
    }

    let n = rows.len();
    let mut columns = vec![SparseVec::empty(); d];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            if v != F::zero() {
                let col = &mut columns[j as usize];
                col.indices.push(i as u32);
                col.values.push(v);
            }
        }
    }
    Ok((RawMatrix { n, d, columns }, ResponseVector::new(y)?))
}

/// Reads a libsvm stream into a validated covariate matrix; errors if any
/// value falls outside [0, 1]. Use [`load_libsvm_raw`] + binarization for
/// continuous data.
pub fn load_libsvm<F: Scalar, R: BufRead>(reader: R) -> Result<(CovariateMatrix<F>, ResponseVector<F>)> {
    let (raw, y) = load_libsvm_raw(reader)?;
    Ok((raw.into_covariates()?, y))
}

/// Writes matrix and response in libsvm format. Values equal to 1 are
/// written `1`; everything else uses 17-significant-digit scientific
/// notation, so a reload reproduces the exact same structure.
pub fn write_libsvm<F: Scalar, W: Write>(
    w: &mut W,
    z: &CovariateMatrix<F>,
    y: &ResponseVector<F>,
) -> Result<()> {
    assert_eq!(z.n(), y.len(), "matrix/response length mismatch");
    // Row views of the column store.
    let mut rows: Vec<Vec<(u32, F)>> = vec![Vec::new(); z.n()];
    for j in 0..z.d() {
        for (i, v) in z.column(j).iter() {
            rows[i as usize].push((j as u32 + 1, v));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        write!(w, "{}", fmt_f64(y[i].f64()))?;
        for (j, v) in row {
            if *v == F::one() {
                write!(w, " {j}:1")?;
            } else {
                write!(w, " {j}:{}", fmt_f64(v.f64()))?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Fixed 17-significant-digit scientific formatting (exact f64 round-trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse { line, msg: msg.to_string() }
}
