//! Repeated factorizations for stability analysis and rank estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{factorize, FactorConfig, FactorModel};
use crate::matcore::{mix64, DataMatrix, Dense};
use crate::quality::{consensus, cophenetic, dispersion, rss, evar, ConsensusAccumulator};
use crate::seeding::check_rank;

/// Seed of run `index` at `rank`: nested SplitMix64 finalizers, so nearby
/// inputs give unrelated streams and no run shares a seed with another.
pub fn derive_seed(master_seed: u64, rank: usize, index: usize) -> u64 {
    mix64(mix64(mix64(master_seed) ^ rank as u64) ^ index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBatch {
    pub models: Vec<FactorModel>,
    pub consensus: Dense,
}

/// Runs `runs` independent factorizations and averages their connectivity.
///
/// Results depend only on the inputs: each run gets its own derived seed and
/// the reduction walks runs in index order. `threads` of `None` uses every
/// available core. The first failing run (by index) aborts the batch.
pub fn run_many(
    v: &DataMatrix,
    config: &FactorConfig,
    runs: usize,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<RunBatch> {
    if runs == 0 {
        return Err(Error::Param("runs must be >= 1".into()));
    }
    let job = |idx: usize| {
        let mut cfg = config.clone();
        cfg.master_seed = derive_seed(master_seed, config.rank, idx);
        factorize(v, &cfg).map(|(model, _)| model)
    };
    let results: Vec<Result<FactorModel>> = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Param(format!("cannot start {t} worker threads: {e}")))?;
            pool.install(|| (0..runs).into_par_iter().map(job).collect())
        }
        None => (0..runs).into_par_iter().map(job).collect(),
    };
    let models = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut acc = ConsensusAccumulator::new(v.cols());
    for model in &models {
        acc.add_mixture(&model.h)?;
    }
    Ok(RunBatch { consensus: consensus(&acc)?, models })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSweepConfig {
    pub ranks: Vec<usize>,
    pub runs_per_rank: usize,
    /// Template for every run; its rank and master seed are overridden.
    pub base: FactorConfig,
    pub master_seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub rank: usize,
    pub cophenetic: f64,
    pub dispersion: f64,
    pub mean_rss: f64,
    pub mean_evar: f64,
    pub mean_n_iter: f64,
    pub consensus: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub method: String,
    pub runs_per_rank: usize,
    pub master_seed: u64,
    pub records: Vec<RankRecord>,
    pub recommended_rank: usize,
    pub warnings: Vec<String>,
}

impl ConsensusReport {
    pub const CSV_HEADER: &'static str = "rank,cophenetic,dispersion,mean_rss,mean_evar,mean_n_iter";

    /// One line per rank, numbers in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.rank, r.cophenetic, r.dispersion, r.mean_rss, r.mean_evar, r.mean_n_iter
            ));
        }
        out
    }
}

/// Cophenetic values closer than this count as tied.
pub const COPHENETIC_TIE: f64 = 1e-12;

/// Multi-run consensus at each rank; recommends the rank with the highest
/// cophenetic correlation (ties, up to [`COPHENETIC_TIE`], go to the smallest
/// rank).
pub fn rank_sweep(v: &DataMatrix, sweep: &RankSweepConfig) -> Result<ConsensusReport> {
    let (m, n) = v.shape();
    let mut ranks = sweep.ranks.clone();
    ranks.sort_unstable();
    ranks.dedup();
    if ranks.is_empty() {
        return Err(Error::Param("rank sweep needs at least one rank".into()));
    }
    for &k in &ranks {
        check_rank(m, n, k)?;
    }
    let mut warnings = Vec::new();
    if sweep.runs_per_rank == 1 {
        warnings.push("a single run per rank gives a 0/1 consensus; cophenetic and dispersion are degenerate".into());
    }

    let mut records = Vec::with_capacity(ranks.len());
    for &k in &ranks {
        let mut config = sweep.base.clone();
        config.rank = k;
        let batch = run_many(v, &config, sweep.runs_per_rank, sweep.master_seed, sweep.threads)?;
        let runs = batch.models.len() as f64;
        let (mut total_rss, mut total_evar, mut total_iter) = (0.0, 0.0, 0.0);
        for model in &batch.models {
            total_rss += rss(v, model)?;
            total_evar += evar(v, model)?;
            total_iter += model.n_iter as f64;
        }
        records.push(RankRecord {
            rank: k,
            cophenetic: cophenetic(&batch.consensus)?,
            dispersion: dispersion(&batch.consensus),
            mean_rss: total_rss / runs,
            mean_evar: total_evar / runs,
            mean_n_iter: total_iter / runs,
            consensus: (0..n).map(|i| batch.consensus.row(i).to_vec()).collect(),
        });
    }

    let mut best = &records[0];
    for r in &records[1..] {
        if r.cophenetic > best.cophenetic + COPHENETIC_TIE {
            best = r;
        }
    }
    Ok(ConsensusReport {
        method: sweep.base.method.name().to_string(),
        runs_per_rank: sweep.runs_per_rank,
        master_seed: sweep.master_seed,
        recommended_rank: best.rank,
        records,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::Method;
    use crate::matcore::RngStream;
    use crate::quality::connectivity;

    fn data(seed: u64) -> DataMatrix {
        let mut rng = RngStream::new(seed);
        DataMatrix::Dense(Dense::from_fn(12, 9, |_, _| rng.uniform()))
    }

    fn config(k: usize) -> FactorConfig {
        let mut c = FactorConfig::new(Method::NmfKl, k);
        c.max_iter = 50;
        c
    }

    #[test]
    fn single_run_consensus_is_its_connectivity() {
        let v = data(1);
        let batch = run_many(&v, &config(2), 1, 9, Some(1)).unwrap();
        assert_eq!(batch.consensus, connectivity(&batch.models[0].h));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let v = data(2);
        let serial = run_many(&v, &config(3), 8, 42, Some(1)).unwrap();
        let parallel = run_many(&v, &config(3), 8, 42, Some(4)).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial, run_many(&v, &config(3), 8, 42, Some(1)).unwrap());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for rank in 1..6 {
            for idx in 0..100 {
                assert!(seen.insert(derive_seed(7, rank, idx)));
            }
        }
    }

    #[test]
    fn failing_run_aborts() {
        let v = data(3);
        let err = run_many(&v, &config(20), 3, 0, Some(2)).unwrap_err();
        assert_eq!(err.kind(), "rank");
        assert_eq!(run_many(&v, &config(2), 0, 0, None).unwrap_err().kind(), "param");
    }

    #[test]
    fn single_candidate_is_recommended() {
        let v = data(4);
        let sweep = RankSweepConfig { ranks: vec![3], runs_per_rank: 5, base: config(1), master_seed: 0, threads: Some(2) };
        let report = rank_sweep(&v, &sweep).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.recommended_rank, 3);
        let r = &report.records[0];
        assert!((-1.0..=1.0).contains(&r.cophenetic) && (0.0..=1.0).contains(&r.dispersion));
    }

    #[test]
    fn csv_has_one_row_per_rank() {
        let v = data(5);
        let sweep = RankSweepConfig { ranks: vec![4, 2, 3], runs_per_rank: 2, base: config(1), master_seed: 1, threads: None };
        let report = rank_sweep(&v, &sweep).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("2,") && lines[3].starts_with("4,"));
    }
}
