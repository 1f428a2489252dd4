//! Matrix file formats.
//!
//! Canonical: JSON `{"n": 2, "data": [[[re, im], [re, im]], [[re, im], [re, im]]]}`,
//! row-major. Convenience: CSV of complex literals such as `1`, `0.5-2i`, `3j`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, CMatrix};

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    data: Vec<Vec<[f64; 2]>>,
}

pub fn parse_json(text: &str) -> Result<CMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix json: {e}")))?;
    if file.data.len() != file.n {
        return Err(Error::Parse(format!(
            "declared n = {} but {} rows present",
            file.n,
            file.data.len()
        )));
    }
    for (i, row) in file.data.iter().enumerate() {
        if row.len() != file.n {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected {}",
                row.len(),
                file.n
            )));
        }
    }
    let n = file.n;
    let m = CMatrix::from_fn(n, n, |i, j| c(file.data[i][j][0], file.data[i][j][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse("non-finite entry".into()));
    }
    Ok(m)
}

pub fn to_json(m: &CMatrix) -> String {
    let file = MatrixFile {
        n: m.nrows(),
        data: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect(),
    };
    serde_json::to_string(&file).expect("matrix serializes")
}

/// Parses one complex literal: `a`, `a+bi`, `a-bi`, `bi`, `-j`, ...
pub fn parse_complex(literal: &str) -> Result<Complex64> {
    let s: String = literal.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad complex literal '{literal}'"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok(c(num(&s)?, 0.0));
    };
    // Split before the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => num(t)?,
    };
    let z = c(re, im);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(bad());
    }
    Ok(z)
}

pub fn parse_csv(text: &str) -> Result<CMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: ragged row ({} entries, expected {})",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let (r, k) = (rows.len(), rows[0].len());
    Ok(CMatrix::from_fn(r, k, |i, j| rows[i][j]))
}

/// Reads a matrix, choosing the parser from the extension (`.csv`) or content.
pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let is_csv = path.extension().map(|e| e.eq_ignore_ascii_case("csv")).unwrap_or(false);
    if is_csv || !text.trim_start().starts_with('{') {
        parse_csv(&text)
    } else {
        parse_json(&text)
    }
}
