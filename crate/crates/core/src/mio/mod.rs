//! File I/O and synthetic data: MatrixMarket and CSV matrices, summary and
//! report documents, and a seeded block-structured generator.

mod csv;
mod market;
mod summary;
mod synth;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::DataMatrix;

pub use csv::{parse_csv, render_csv};
pub use market::{parse_market, render_market};
pub use summary::{write_report, write_summary, SummaryDocument, SCHEMA_VERSION};
pub use synth::{synth, SynthData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Mtx,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
            Some("mtx") => Ok(Format::Mtx),
            Some("csv") => Ok(Format::Csv),
            _ => Err(Error::Param(format!(
                "cannot infer matrix format of '{}' (expected .mtx or .csv)",
                path.display()
            ))),
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtx" => Ok(Format::Mtx),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Param(format!("unknown matrix format '{other}' (expected mtx or csv)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Mtx => "mtx",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Accept negative entries (factorization still rejects them later).
    pub allow_negative: bool,
}

pub fn read_matrix(path: &Path, format: Format, opts: ReadOptions) -> Result<DataMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        Format::Mtx => parse_market(&text, opts),
        Format::Csv => parse_csv(&text, opts),
    }
}

/// Dense matrices go out as MatrixMarket `array`, sparse ones as
/// `coordinate`; CSV always densifies.
pub fn write_matrix(m: &DataMatrix, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Mtx => render_market(m),
        Format::Csv => render_csv(&m.to_dense()),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// V divided by its largest entry (unchanged when V is all zero).
pub fn scale_unit(v: &DataMatrix) -> DataMatrix {
    let max = v.max();
    if max > 0.0 {
        v.scaled(1.0 / max)
    } else {
        v.clone()
    }
}

fn parse_value(token: &str, line: usize, opts: ReadOptions) -> Result<f64> {
    let x: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("'{token}' is not a number")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("non-finite value '{token}'")));
    }
    if x < 0.0 && !opts.allow_negative {
        return Err(Error::Domain(format!("negative entry {x} at line {line}")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{Csr, Dense, RngStream};

    #[test]
    fn file_roundtrip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngStream::new(5);
        let dense = DataMatrix::Dense(Dense::from_fn(3, 3, |_, _| rng.uniform()));
        let sparse = DataMatrix::Sparse(Csr::from_triplets(4, 3, &[(0, 1, 0.25), (3, 2, 1e-300), (2, 0, 7.5)]).unwrap());
        for fmt in [Format::Mtx, Format::Csv] {
            let path = dir.path().join(format!("m.{fmt}"));
            write_matrix(&dense, &path, fmt).unwrap();
            assert_eq!(read_matrix(&path, fmt, ReadOptions::default()).unwrap().to_dense(), dense.to_dense());
            write_matrix(&sparse, &path, fmt).unwrap();
            let back = read_matrix(&path, fmt, ReadOptions::default()).unwrap();
            assert_eq!(back.to_dense(), sparse.to_dense());
        }
        let path = dir.path().join("s.mtx");
        write_matrix(&sparse, &path, Format::Mtx).unwrap();
        assert_eq!(read_matrix(&path, Format::Mtx, ReadOptions::default()).unwrap(), sparse);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_matrix(Path::new("/no/such/V.mtx"), Format::Mtx, ReadOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "io");
        assert!(err.to_string().contains("/no/such/V.mtx"));
    }

    #[test]
    fn format_names() {
        assert_eq!(Format::from_path(Path::new("a/V.MTX")).unwrap(), Format::Mtx);
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap_err().kind(), "param");
    }

    #[test]
    fn unit_scaling() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[2.0, 4.0]]));
        assert_eq!(scale_unit(&v).to_dense(), Dense::from_rows(&[[0.5, 1.0]]));
    }
}
