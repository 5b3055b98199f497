//! Dense Matrix Market files (`array` format, `complex` or `real` field,
//! `general` symmetry).
//!
//! Entries are stored column-major, one per line. Writes use 17
//! significant digits per component, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mpx_core::{CMatrix, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: unsupported format keyword `{keyword}`")]
    Unsupported { line: usize, keyword: String },
    #[error("line {line}: bad size line `{text}`")]
    BadSize { line: usize, text: String },
    #[error("line {line}: expected {expected} tokens per entry, found {found}")]
    EntryArity { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse `{token}` as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: non-finite value `{token}`")]
    NonFinite { line: usize, token: String },
    #[error("dimension mismatch: header declares {expected} entries, file has {found}")]
    EntryCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

fn parse_header(line_no: usize, text: &str) -> Result<Field, MmError> {
    let malformed = |reason: &str| MmError::MalformedHeader {
        line: line_no,
        reason: reason.to_string(),
    };
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("%%MatrixMarket") {
        return Err(malformed("expected `%%MatrixMarket`"));
    }
    let words: Vec<String> = tokens.map(str::to_ascii_lowercase).collect();
    if words.len() != 4 {
        return Err(malformed("expected `matrix <format> <field> <symmetry>`"));
    }
    let unsupported = |k: &str| MmError::Unsupported {
        line: line_no,
        keyword: k.to_string(),
    };
    if words[0] != "matrix" {
        return Err(unsupported(&words[0]));
    }
    if words[1] != "array" {
        return Err(unsupported(&words[1]));
    }
    let field = match words[2].as_str() {
        "complex" => Field::Complex,
        "real" => Field::Real,
        other => return Err(unsupported(other)),
    };
    if words[3] != "general" {
        return Err(unsupported(&words[3]));
    }
    Ok(field)
}

fn parse_number(line: usize, token: &str) -> Result<f64, MmError> {
    let v: f64 = token.parse().map_err(|_| MmError::BadNumber {
        line,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(MmError::NonFinite {
            line,
            token: token.to_string(),
        });
    }
    Ok(v)
}

/// Parses Matrix Market text.
pub fn parse_matrix(text: &str) -> Result<CMatrix, MmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, htext) = lines.next().ok_or_else(|| MmError::MalformedHeader {
        line: 1,
        reason: "empty file".into(),
    })?;
    let field = parse_header(hline, htext)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, stext) = body.next().ok_or(MmError::BadSize {
        line: hline + 1,
        text: String::new(),
    })?;
    let dims: Vec<usize> = stext
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| MmError::BadSize {
            line: sline,
            text: stext.trim().to_string(),
        })?;
    let [rows, cols] = dims[..] else {
        return Err(MmError::BadSize {
            line: sline,
            text: stext.trim().to_string(),
        });
    };

    let arity = match field {
        Field::Real => 1,
        Field::Complex => 2,
    };
    let expected = rows * cols;
    let mut col_major = Vec::with_capacity(expected);
    for (line, l) in body {
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != arity {
            return Err(MmError::EntryArity {
                line,
                expected: arity,
                found: tokens.len(),
            });
        }
        let re = parse_number(line, tokens[0])?;
        let im = if arity == 2 { parse_number(line, tokens[1])? } else { 0.0 };
        col_major.push(C64::new(re, im));
    }
    if col_major.len() != expected {
        return Err(MmError::EntryCount {
            expected,
            found: col_major.len(),
        });
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| col_major[j * rows + i]))
}

/// Formats `a` as Matrix Market text. Each `comments` entry becomes a `%` line.
pub fn format_matrix(a: &CMatrix, comments: &[String]) -> String {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    for c in comments {
        let _ = writeln!(out, "% {c}");
    }
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let z = a[(i, j)];
            let _ = writeln!(out, "{:.16e} {:.16e}", z.re, z.im);
        }
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMatrix, MmError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &CMatrix) -> Result<(), MmError> {
    write_matrix_with_comments(path, a, &[])
}

pub fn write_matrix_with_comments(path: impl AsRef<Path>, a: &CMatrix, comments: &[String]) -> Result<(), MmError> {
    let path = path.as_ref();
    fs::write(path, format_matrix(a, comments)).map_err(|source| MmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mpx_core::c64;

    #[test]
    fn round_trip_is_exact() {
        let a = CMatrix::from_fn(3, 2, |i, j| c64(1.0 / (i as f64 + 3.0), -std::f64::consts::PI * j as f64 + 1e-300));
        let back = parse_matrix(&format_matrix(&a, &["note".into()])).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn column_major_order() {
        let text = "%%MatrixMarket matrix array complex general\n% c\n2 2\n1 0\n2 0\n3 0\n4 1\n";
        let a = parse_matrix(text).unwrap();
        assert_eq!(a, CMatrix::from_rows(&[[c64(1.0, 0.0), c64(3.0, 0.0)], [c64(2.0, 0.0), c64(4.0, 1.0)]]));
    }

    #[test]
    fn real_field_and_empty_matrix() {
        let a = parse_matrix("%%MatrixMarket matrix array real general\n1 2\n5\n-1\n").unwrap();
        assert_eq!(a[(0, 1)], c64(-1.0, 0.0));
        let e = parse_matrix("%%MatrixMarket matrix array complex general\n0 3\n").unwrap();
        assert_eq!(e.shape(), (0, 3));
    }

    #[test]
    fn distinct_errors() {
        let err = parse_matrix("%%MatrixMarket matrix coordinate complex general\n1 1 1\n").unwrap_err();
        assert!(matches!(err, MmError::Unsupported { line: 1, ref keyword } if keyword == "coordinate"));

        let err = parse_matrix("%%MatrixMarket matrix array complex general\n1 2\n1 0\n7\n").unwrap_err();
        assert!(matches!(err, MmError::EntryArity { line: 4, expected: 2, found: 1 }));
        assert!(err.to_string().contains("line 4"));

        let err = parse_matrix("MatrixMarket matrix array complex general\n").unwrap_err();
        assert!(matches!(err, MmError::MalformedHeader { line: 1, .. }));

        let err = parse_matrix("%%MatrixMarket matrix array complex general\n2 x\n").unwrap_err();
        assert!(matches!(err, MmError::BadSize { line: 2, .. }));

        let err = parse_matrix("%%MatrixMarket matrix array complex general\n1 1\nnan 0\n").unwrap_err();
        assert!(matches!(err, MmError::NonFinite { line: 3, .. }));

        let err = parse_matrix("%%MatrixMarket matrix array complex general\n1 1\n1 zz\n").unwrap_err();
        assert!(matches!(err, MmError::BadNumber { line: 3, .. }));

        let err = parse_matrix("%%MatrixMarket matrix array complex general\n2 1\n1 0\n").unwrap_err();
        assert!(matches!(err, MmError::EntryCount { expected: 2, found: 1 }));

        let err = parse_matrix("%%MatrixMarket matrix array complex hermitian\n1 1\n1 0\n").unwrap_err();
        assert!(matches!(err, MmError::Unsupported { .. }));
    }
}
