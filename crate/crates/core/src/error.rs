use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the factorization pipeline.
///
/// Every variant maps to a short stable kind label (see [`Error::kind`]) so
/// callers and the CLI can classify failures without matching on messages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid rank: {0}")]
    Rank(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("invalid seed factors: {0}")]
    Seed(String),
    #[error("unknown method '{0}'")]
    Method(String),
    #[error("unknown metric '{0}'")]
    Metric(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Domain(_) => "domain",
            Error::Rank(_) => "rank",
            Error::Param(_) => "param",
            Error::Seed(_) => "seed",
            Error::Method(_) => "method",
            Error::Metric(_) => "metric",
            Error::Degenerate(_) => "degenerate",
            Error::Numeric(_) => "numeric",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn shape(op: &str, a: (usize, usize), b: (usize, usize)) -> Self {
        Error::Shape(format!("{op}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
