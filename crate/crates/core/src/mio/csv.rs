use std::fmt::Write;

use crate::error::{Error, Result};
use crate::matcore::{DataMatrix, Dense};

use super::{parse_value, ReadOptions};

/// Comma-separated rows → dense. A first row with any non-numeric field is
/// taken as a header and skipped. Blank lines are ignored.
pub fn parse_csv(text: &str, opts: ReadOptions) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if std::mem::take(&mut first) && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let values = fields.iter().map(|f| parse_value(f, line, opts)).collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::parse(line, format!("row has {} fields, expected {w}", values.len())));
            }
            _ => {}
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::parse(text.lines().count().max(1), "no data rows"));
    }
    Ok(DataMatrix::Dense(Dense::from_rows(&rows)))
}

/// Shortest round-trip decimal form of every value, no header.
pub fn render_csv(m: &Dense) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, x) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:?}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<DataMatrix> {
        parse_csv(text, ReadOptions::default())
    }

    #[test]
    fn plain_rows() {
        assert_eq!(parse("1,2\n3,4").unwrap(), DataMatrix::Dense(Dense::from_rows(&[[1.0, 2.0], [3.0, 4.0]])));
    }

    #[test]
    fn header_is_detected() {
        let m = parse("a,b\n1, 2\n\n3,4\n").unwrap();
        assert_eq!(m.to_dense(), Dense::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("1,2\n3\n").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse("1,2\nx,4\n").unwrap_err(), Error::Parse { line: 2, .. }));
        assert_eq!(parse("1,NaN\n").unwrap_err().kind(), "parse");
        assert_eq!(parse("1,-1\n").unwrap_err().kind(), "domain");
        assert_eq!(parse("a,b\n").unwrap_err().kind(), "parse");
        assert_eq!(parse("").unwrap_err().kind(), "parse");
    }

    #[test]
    fn render_roundtrip() {
        let d = Dense::from_rows(&[[0.1, 1.0 / 3.0, 0.0], [1e-300, 5.0, 1e20]]);
        assert_eq!(parse(&render_csv(&d)).unwrap().to_dense(), d);
    }
}
