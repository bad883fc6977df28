//! Fit diagnostics: residuals, distances, sparseness, feature scores and
//! multi-run clustering stability.

mod consensus;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FactorModel;
use crate::matcore::{kl_div, residual_sq, DataMatrix, Dense, EPS};

pub use consensus::{cophenetic, connectivity, consensus, dispersion, dominant_rows, ConsensusAccumulator};

pub fn rss(v: &DataMatrix, model: &FactorModel) -> Result<f64> {
    residual_sq(v, &model.reconstruction()?)
}

/// 1 − rss / ΣV².
pub fn evar(v: &DataMatrix, model: &FactorModel) -> Result<f64> {
    evar_from_rss(v, rss(v, model)?)
}

fn evar_from_rss(v: &DataMatrix, rss: f64) -> Result<f64> {
    let total = v.frobenius_sq();
    if total == 0.0 {
        return Err(Error::Degenerate("explained variance is undefined for an all-zero V".into()));
    }
    Ok(1.0 - rss / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Kl,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "kl" => Ok(Metric::Kl),
            other => Err(Error::Metric(other.to_string())),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Kl => "kl",
        })
    }
}

/// √rss for `euclidean`, generalized KL divergence for `kl`.
pub fn distance(v: &DataMatrix, model: &FactorModel, metric: Metric) -> Result<f64> {
    let recon = model.reconstruction()?;
    match metric {
        Metric::Euclidean => Ok(residual_sq(v, &recon)?.sqrt()),
        Metric::Kl => kl_div(v, &recon),
    }
}

/// Which vectors of a factor the sparseness measure averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsenessAxis {
    #[default]
    Columns,
    Rows,
}

impl FromStr for SparsenessAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "columns" | "cols" => Ok(SparsenessAxis::Columns),
            "rows" => Ok(SparsenessAxis::Rows),
            other => Err(Error::Param(format!("unknown sparseness axis '{other}' (expected columns or rows)"))),
        }
    }
}

/// Hoyer sparseness (√n − ‖x‖₁/‖x‖₂)/(√n − 1). `None` for an all-zero vector
/// or one of length 1, where the measure is undefined.
pub fn hoyer(x: &[f64]) -> Option<f64> {
    let n = x.len();
    let first = x.iter().copied().find(|&a| a != 0.0)?;
    if n < 2 {
        return None;
    }
    let root_n = (n as f64).sqrt();
    let magnitude = first.abs();
    let ratio = if x.iter().all(|&a| a == 0.0 || a.abs() == magnitude) {
        // Equal magnitudes: ‖x‖₁/‖x‖₂ is exactly √nnz.
        (x.iter().filter(|&&a| a != 0.0).count() as f64).sqrt()
    } else {
        let l1: f64 = x.iter().map(|a| a.abs()).sum();
        let l2 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        l1 / l2
    };
    Some(((root_n - ratio) / (root_n - 1.0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sparseness {
    pub w: f64,
    pub h: f64,
    pub warnings: Vec<String>,
}

/// Mean Hoyer sparseness of W's and H's vectors along `axis`. Undefined
/// vectors count as 0 and raise a warning.
pub fn sparseness(model: &FactorModel, axis: SparsenessAxis) -> Sparseness {
    let mut warnings = Vec::new();
    let w = mean_sparseness(&model.w, axis, "W", &mut warnings);
    let h = mean_sparseness(&model.h, axis, "H", &mut warnings);
    Sparseness { w, h, warnings }
}

fn mean_sparseness(m: &Dense, axis: SparsenessAxis, name: &str, warnings: &mut Vec<String>) -> f64 {
    let vectors: Vec<Vec<f64>> = match axis {
        SparsenessAxis::Columns => (0..m.cols()).map(|j| m.column(j)).collect(),
        SparsenessAxis::Rows => (0..m.rows()).map(|i| m.row(i).to_vec()).collect(),
    };
    let label = match axis {
        SparsenessAxis::Columns => "column",
        SparsenessAxis::Rows => "row",
    };
    let mut total = 0.0;
    let mut undefined = Vec::new();
    for (idx, x) in vectors.iter().enumerate() {
        match hoyer(x) {
            Some(sp) => total += sp,
            None => undefined.push(idx),
        }
    }
    if !undefined.is_empty() {
        warnings.push(format!(
            "sparseness of {name}: {} {label}(s) all-zero or of length 1, counted as 0 (first index {})",
            undefined.len(),
            undefined[0]
        ));
    }
    total / vectors.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub scores: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Entropy-based specificity of each row of W: 1 + (1/log₂k)·Σ p log₂ p with
/// p the row normalized to unit sum. Zero rows score 0 with a warning.
pub fn feature_scores(w: &Dense) -> Result<FeatureScores> {
    let k = w.cols();
    if k < 2 {
        return Err(Error::Rank("feature scores need k >= 2".into()));
    }
    let log_k = (k as f64).log2();
    let mut warnings = Vec::new();
    let scores = (0..w.rows())
        .map(|i| {
            let row = w.row(i);
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                warnings.push(format!("feature {i} has an all-zero basis profile, scored 0"));
                return 0.0;
            }
            let entropy: f64 = row
                .iter()
                .map(|&x| x / total)
                .filter(|&p| p > 0.0)
                .map(|p| p * p.log2())
                .sum();
            (1.0 + entropy / log_k).clamp(0.0, 1.0)
        })
        .collect();
    Ok(FeatureScores { scores, warnings })
}

/// Indices whose score exceeds mean + `n_std`·(population standard deviation).
pub fn select_features(scores: &[f64], n_std: f64) -> Vec<usize> {
    if scores.is_empty() {
        return Vec::new();
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let threshold = mean + n_std * var.sqrt();
    scores.iter().enumerate().filter(|(_, &s)| s > threshold).map(|(i, _)| i).collect()
}

pub const DEFAULT_SELECTION_STD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rss: f64,
    pub evar: f64,
    pub dist_euclidean: f64,
    pub dist_kl: f64,
    pub sparseness_w: f64,
    pub sparseness_h: f64,
    pub n_iter: usize,
    pub final_objective: f64,
    pub warnings: Vec<String>,
}

impl FitSummary {
    /// Every fit measure for `model`. The KL distance treats zero
    /// reconstruction entries opposite positive data as ε (with a warning)
    /// so the summary stays finite.
    pub fn compute(v: &DataMatrix, model: &FactorModel, axis: SparsenessAxis) -> Result<Self> {
        let recon = model.reconstruction()?;
        let rss = residual_sq(v, &recon)?;
        let evar = evar_from_rss(v, rss)?;
        let mut warnings = Vec::new();
        let dist_kl = match kl_div(v, &recon) {
            Ok(d) => d,
            Err(Error::Domain(_)) => {
                warnings.push("reconstruction has zeros where V > 0; clamped to machine epsilon for the KL distance".into());
                kl_div(v, &recon.map(|x| x.max(EPS)))?
            }
            Err(e) => return Err(e),
        };
        let sp = sparseness(model, axis);
        warnings.extend(sp.warnings);
        Ok(FitSummary {
            rss,
            evar,
            dist_euclidean: rss.sqrt(),
            dist_kl,
            sparseness_w: sp.w,
            sparseness_h: sp.h,
            n_iter: model.n_iter,
            final_objective: model.final_objective,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{Method, ObjectiveKind};

    fn model(w: Dense, h: Dense) -> FactorModel {
        FactorModel {
            w,
            h,
            method: Method::NmfEu,
            theta: None,
            n_iter: 0,
            final_objective: 0.0,
            objective_kind: ObjectiveKind::Euclidean,
        }
    }

    #[test]
    fn scalar_rss_and_evar() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[2.0]]));
        let m = model(Dense::from_rows(&[[1.0]]), Dense::from_rows(&[[1.0]]));
        assert_eq!(rss(&v, &m).unwrap(), 1.0);
        assert_eq!(evar(&v, &m).unwrap(), 0.75);
        let exact = DataMatrix::Dense(Dense::from_rows(&[[1.0]]));
        assert_eq!(rss(&exact, &m).unwrap(), 0.0);
        assert_eq!(evar(&exact, &m).unwrap(), 1.0);
        let zero = DataMatrix::Dense(Dense::zeros(1, 1));
        assert_eq!(evar(&zero, &m).unwrap_err().kind(), "degenerate");
    }

    #[test]
    fn distances() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[1.0]]));
        let m = model(Dense::from_rows(&[[std::f64::consts::E]]), Dense::from_rows(&[[1.0]]));
        let kl = distance(&v, &m, Metric::Kl).unwrap();
        assert!((kl - (std::f64::consts::E - 2.0)).abs() < 1e-15);
        assert_eq!("cosine".parse::<Metric>().unwrap_err().kind(), "metric");
        let exact = model(Dense::from_rows(&[[1.0]]), Dense::from_rows(&[[1.0]]));
        assert_eq!(distance(&v, &exact, Metric::Euclidean).unwrap(), 0.0);
        assert_eq!(distance(&v, &exact, Metric::Kl).unwrap(), 0.0);
    }

    #[test]
    fn hoyer_cases() {
        assert_eq!(hoyer(&[1.0, 0.0, 0.0, 0.0]), Some(1.0));
        assert_eq!(hoyer(&[0.3, 0.3, 0.3, 0.3]), Some(0.0));
        assert!((hoyer(&[1.0, 1.0, 0.0, 0.0]).unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(hoyer(&[0.0, 0.0]), None);
        assert_eq!(hoyer(&[4.0]), None);
    }

    #[test]
    fn zero_column_warns() {
        let m = model(Dense::from_rows(&[[1.0, 0.0], [0.0, 0.0]]), Dense::from_rows(&[[1.0, 0.0], [0.0, 1.0]]));
        let sp = sparseness(&m, SparsenessAxis::Columns);
        assert_eq!(sp.w, 0.5);
        assert_eq!(sp.h, 1.0);
        assert_eq!(sp.warnings.len(), 1);
    }

    #[test]
    fn feature_score_cases() {
        let w = Dense::from_rows(&[[1.0, 0.0], [2.0, 2.0], [3.0, 1.0], [0.0, 0.0]]);
        let fs = feature_scores(&w).unwrap();
        assert_eq!(fs.scores[0], 1.0);
        assert_eq!(fs.scores[1], 0.0);
        let want = 1.0 + (0.75 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((fs.scores[2] - want).abs() < 1e-15);
        assert!((fs.scores[2] - 0.18872).abs() < 1e-5);
        assert_eq!(fs.scores[3], 0.0);
        assert_eq!(fs.warnings.len(), 1);
        assert_eq!(feature_scores(&Dense::filled(3, 1, 1.0)).unwrap_err().kind(), "rank");
    }

    #[test]
    fn selection_threshold() {
        let mut scores = vec![0.1; 20];
        scores[7] = 0.95;
        assert_eq!(select_features(&scores, 3.0), vec![7]);
        assert!(select_features(&[0.5; 4], 3.0).is_empty());
    }

    #[test]
    fn summary_identities() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[1.0, 2.0], [3.0, 0.5]]));
        let m = model(Dense::from_rows(&[[1.0], [1.5]]), Dense::from_rows(&[[1.0, 1.0]]));
        let s = FitSummary::compute(&v, &m, SparsenessAxis::Columns).unwrap();
        assert_eq!(s.evar, 1.0 - s.rss / v.frobenius_sq());
        assert_eq!(s.dist_euclidean * s.dist_euclidean, s.rss);
    }

    #[test]
    fn summary_clamps_zero_reconstruction() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[1.0, 1.0]]));
        let m = model(Dense::from_rows(&[[1.0]]), Dense::from_rows(&[[1.0, 0.0]]));
        let s = FitSummary::compute(&v, &m, SparsenessAxis::Columns).unwrap();
        assert!(s.dist_kl.is_finite() && s.dist_kl > 30.0);
        assert!(s.warnings.iter().any(|w| w.contains("clamped")));
    }
}
