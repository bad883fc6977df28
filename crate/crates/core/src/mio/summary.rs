use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{FactorConfig, FactorModel, RunTrace};
use crate::multirun::ConsensusReport;
use crate::quality::FitSummary;

pub const SCHEMA_VERSION: &str = "1";

/// Machine-readable result of one factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub schema_version: String,
    pub method: String,
    pub rank: usize,
    pub seed_method: String,
    pub n_iter: usize,
    pub max_iter: usize,
    pub rss: f64,
    pub evar: f64,
    pub dist_euclidean: f64,
    pub dist_kl: f64,
    pub sparseness_w: f64,
    pub sparseness_h: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective_trace: Option<Vec<f64>>,
    pub warnings: Vec<String>,
    pub timing_ms: u64,
}

impl SummaryDocument {
    pub fn new(config: &FactorConfig, model: &FactorModel, fit: &FitSummary, trace: &RunTrace, timing_ms: u64) -> Self {
        SummaryDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            method: model.method.name().to_string(),
            rank: model.rank(),
            seed_method: config.seed.name().to_string(),
            n_iter: model.n_iter,
            max_iter: config.max_iter,
            rss: fit.rss,
            evar: fit.evar,
            dist_euclidean: fit.dist_euclidean,
            dist_kl: fit.dist_kl,
            sparseness_w: fit.sparseness_w,
            sparseness_h: fit.sparseness_h,
            objective_trace: config.track_error.then(|| trace.objective_per_iter.clone()),
            warnings: fit.warnings.clone(),
            timing_ms,
        }
    }

    fn check_finite(&self) -> Result<()> {
        let scalars = [self.rss, self.evar, self.dist_euclidean, self.dist_kl, self.sparseness_w, self.sparseness_h];
        let trace = self.objective_trace.iter().flatten();
        if scalars.iter().chain(trace).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("summary contains non-finite values".into()));
        }
        Ok(())
    }
}

pub fn write_summary(doc: &SummaryDocument, path: &Path) -> Result<()> {
    doc.check_finite()?;
    write_json(doc, path)
}

/// Writes `consensus_report.json` and `consensus_report.csv` into `dir`.
pub fn write_report(report: &ConsensusReport, dir: &Path) -> Result<()> {
    write_json(report, &dir.join("consensus_report.json"))?;
    let csv = dir.join("consensus_report.csv");
    fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(format!("cannot serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{factorize, Method};
    use crate::matcore::{DataMatrix, Dense};
    use crate::quality::SparsenessAxis;

    const KEYS: [&str; 15] = [
        "schema_version",
        "method",
        "rank",
        "seed_method",
        "n_iter",
        "max_iter",
        "rss",
        "evar",
        "dist_euclidean",
        "dist_kl",
        "sparseness_w",
        "sparseness_h",
        "objective_trace",
        "warnings",
        "timing_ms",
    ];

    fn document(track: bool) -> SummaryDocument {
        let v = DataMatrix::Dense(Dense::from_fn(5, 4, |i, j| (1 + i + 2 * j) as f64));
        let mut config = FactorConfig::new(Method::NmfEu, 2);
        config.track_error = track;
        let (model, trace) = factorize(&v, &config).unwrap();
        let fit = FitSummary::compute(&v, &model, SparsenessAxis::Columns).unwrap();
        SummaryDocument::new(&config, &model, &fit, &trace, 0)
    }

    #[test]
    fn json_has_required_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        write_summary(&document(true), &path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let obj = value.as_object().unwrap();
        for key in KEYS {
            assert!(obj.contains_key(key), "{key}");
        }
        assert_eq!(obj.len(), KEYS.len());
        assert_eq!(obj["schema_version"], "1");
    }

    #[test]
    fn trace_omitted_when_untracked() {
        let text = serde_json::to_string(&document(false)).unwrap();
        assert!(!text.contains("objective_trace"));
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut doc = document(false);
        doc.rss = f64::NAN;
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(write_summary(&doc, &dir.path().join("s.json")).unwrap_err().kind(), "numeric");
    }
}
