//! MatrixMarket text format.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Matrix, SparseCsr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads a MatrixMarket file. Coordinate files give a CSR matrix, array files
/// a dense one.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses MatrixMarket text from any reader.
///
/// Symmetric and skew-symmetric storage is expanded, pattern entries become
/// 1.0, explicit zeros are kept and duplicate coordinates are summed.
pub fn parse_matrix_market(reader: impl Read) -> Result<Matrix> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let (layout, field, symmetry) = parse_header(lineno, &header)?;

    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((n, other)),
    });

    let (size_line, size) = match data.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(lineno + 1, "missing size line")),
    };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size token `{t}`"))))
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(parse_err(size_line, format!("expected {want} integers on the size line")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut triplets = Vec::with_capacity(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
            let mut count = 0;
            let mut last = size_line;
            for (n, l) in data {
                let l = l?;
                last = n;
                count += 1;
                if count > nnz {
                    return Err(parse_err(n, format!("more than the declared {nnz} entries")));
                }
                let toks: Vec<&str> = l.split_whitespace().collect();
                let expect = if field == Field::Pattern { 2 } else { 3 };
                if toks.len() != expect {
                    return Err(parse_err(n, format!("expected {expect} fields, found {}", toks.len())));
                }
                let i = parse_index(n, toks[0])?;
                let j = parse_index(n, toks[1])?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::IndexOutOfBounds { line: n, row: i, col: j, rows, cols });
                }
                let v = if field == Field::Pattern { 1.0 } else { parse_value(n, toks[2], field)? };
                let (i, j) = (i - 1, j - 1);
                push_entry(&mut triplets, n, i, j, v, symmetry)?;
            }
            if count < nnz {
                return Err(parse_err(last, format!("expected {nnz} entries, found {count}")));
            }
            Ok(Matrix::Sparse(SparseCsr::from_triplets(rows, cols, triplets)?))
        }
        Layout::Array => {
            if field == Field::Pattern {
                return Err(parse_err(lineno, "pattern field is only valid for coordinate files"));
            }
            // Column-major; symmetric storage lists the lower triangle only.
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::Skew => j + 1,
                    };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut a = DenseMatrix::zeros(rows, cols);
            let mut k = 0;
            let mut last = size_line;
            for (n, l) in data {
                let l = l?;
                last = n;
                for tok in l.split_whitespace() {
                    let Some(&(i, j)) = positions.get(k) else {
                        return Err(parse_err(n, format!("more than the expected {} values", positions.len())));
                    };
                    let v = parse_value(n, tok, field)?;
                    a.set(i, j, v);
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => a.set(j, i, v),
                        Symmetry::Skew => a.set(j, i, -v),
                    }
                    k += 1;
                }
            }
            if k < positions.len() {
                return Err(parse_err(last, format!("expected {} values, found {k}", positions.len())));
            }
            Ok(Matrix::Dense(a))
        }
    }
}

fn parse_header(line: usize, header: &str) -> Result<(Layout, Field, Symmetry)> {
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(parse_err(line, "missing `%%MatrixMarket matrix <format> <field> <symmetry>` header"));
    }
    if toks[1] != "matrix" {
        return Err(parse_err(line, format!("unsupported object `{}`", toks[1])));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(line, format!("unknown format `{other}`"))),
    };
    let field = match toks[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(line, format!("unsupported symmetry `{other}`"))),
    };
    Ok((layout, field, symmetry))
}

fn parse_index(line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("bad index `{tok}`")))
}

fn parse_value(line: usize, tok: &str, field: Field) -> Result<f64> {
    let v = if field == Field::Integer {
        tok.parse::<i64>().map(|v| v as f64).ok()
    } else {
        tok.parse::<f64>().ok()
    };
    match v {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("bad value `{tok}`"))),
    }
}

fn push_entry(
    triplets: &mut Vec<(usize, usize, f64)>,
    line: usize,
    i: usize,
    j: usize,
    v: f64,
    symmetry: Symmetry,
) -> Result<()> {
    triplets.push((i, j, v));
    match symmetry {
        Symmetry::General => {}
        _ if i < j => return Err(parse_err(line, "symmetric storage must list the lower triangle")),
        Symmetry::Symmetric if i != j => triplets.push((j, i, v)),
        Symmetry::Skew if i == j => return Err(parse_err(line, "skew-symmetric file has a diagonal entry")),
        Symmetry::Skew => triplets.push((j, i, -v)),
        _ => {}
    }
    Ok(())
}

/// Serialises `a` as MatrixMarket text: sparse as `coordinate real general`,
/// dense as `array real general`, values with 17 significant digits.
pub fn format_matrix_market(a: &Matrix) -> String {
    let mut out = String::new();
    match a {
        Matrix::Sparse(s) => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            let _ = writeln!(out, "{} {} {}", s.rows(), s.cols(), s.nnz());
            for i in 0..s.rows() {
                let (idx, vals) = s.row(i);
                for (j, v) in idx.iter().zip(vals) {
                    let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
                }
            }
        }
        Matrix::Dense(d) => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(out, "{} {}", d.rows(), d.cols());
            for j in 0..d.cols() {
                for i in 0..d.rows() {
                    let _ = writeln!(out, "{:.16e}", d.get(i, j));
                }
            }
        }
    }
    out
}

/// Writes [`format_matrix_market`] output atomically.
pub fn write_matrix_market(a: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), format_matrix_market(a).as_bytes())
}
