use std::fmt::Write;

use crate::error::{Error, Result};
use crate::matcore::{Csr, DataMatrix, Dense};

use super::{parse_value, ReadOptions};

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

/// Parses a MatrixMarket `real general` file: `coordinate` → CSR, `array`
/// (column-major) → dense.
pub fn parse_market(text: &str, opts: ReadOptions) -> Result<DataMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let layout = parse_banner(banner)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| Error::parse(1, "missing size line"))?;
    let dims = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(size_line, format!("bad size token '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(Error::parse(size_line, format!("size line needs {want} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 || cols == 0 {
        return Err(Error::parse(size_line, "matrix dimensions must be >= 1"));
    }

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut triplets = Vec::with_capacity(nnz);
            let mut last_line = size_line;
            for (line, entry) in body {
                last_line = line;
                if triplets.len() == nnz {
                    return Err(Error::parse(line, format!("more entries than the {nnz} declared")));
                }
                let tok: Vec<&str> = entry.split_whitespace().collect();
                if tok.len() != 3 {
                    return Err(Error::parse(line, "coordinate entry needs 'row col value'"));
                }
                let index = |t: &str, bound: usize| -> Result<usize> {
                    match t.parse::<usize>() {
                        Ok(i) if (1..=bound).contains(&i) => Ok(i - 1),
                        _ => Err(Error::parse(line, format!("index '{t}' outside 1..={bound}"))),
                    }
                };
                let (i, j) = (index(tok[0], rows)?, index(tok[1], cols)?);
                triplets.push((i, j, parse_value(tok[2], line, opts)?));
            }
            if triplets.len() != nnz {
                return Err(Error::parse(last_line, format!("found {} entries, header declares {nnz}", triplets.len())));
            }
            Ok(DataMatrix::Sparse(Csr::from_triplets(rows, cols, &triplets)?))
        }
        Layout::Array => {
            let total = rows * cols;
            let mut column_major = Vec::with_capacity(total);
            let mut last_line = size_line;
            for (line, entry) in body {
                last_line = line;
                for tok in entry.split_whitespace() {
                    if column_major.len() == total {
                        return Err(Error::parse(line, format!("more values than the {total} declared")));
                    }
                    column_major.push(parse_value(tok, line, opts)?);
                }
            }
            if column_major.len() != total {
                return Err(Error::parse(last_line, format!("found {} values, header declares {total}", column_major.len())));
            }
            Ok(DataMatrix::Dense(Dense::from_fn(rows, cols, |i, j| column_major[j * rows + i])))
        }
    }
}

fn parse_banner(banner: &str) -> Result<Layout> {
    let tok: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tok.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(Error::parse(1, "missing %%MatrixMarket banner"));
    }
    if tok.len() != 5 || tok[1] != "matrix" {
        return Err(Error::parse(1, "banner must read '%%MatrixMarket matrix <layout> real general'"));
    }
    let layout = match tok[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::parse(1, format!("unsupported layout '{other}'"))),
    };
    if tok[3] != "real" || tok[4] != "general" {
        return Err(Error::parse(1, format!("unsupported field/symmetry '{} {}' (only 'real general')", tok[3], tok[4])));
    }
    Ok(layout)
}

/// Values are written with 17 significant digits, enough to round-trip.
pub fn render_market(m: &DataMatrix) -> String {
    let mut out = String::new();
    match m {
        DataMatrix::Dense(d) => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(out, "{} {}", d.rows(), d.cols());
            for j in 0..d.cols() {
                for i in 0..d.rows() {
                    let _ = writeln!(out, "{:.16e}", d.get(i, j));
                }
            }
        }
        DataMatrix::Sparse(s) => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            let _ = writeln!(out, "{} {} {}", s.rows(), s.cols(), s.nnz());
            for i in 0..s.rows() {
                for (j, x) in s.row_entries(i) {
                    let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, x);
                }
            }
        }
    }
    out
}
