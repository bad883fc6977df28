//! Command-line front end: `factorize`, `rank-estimate`, `synth`, `convert`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::factor::{factorize, FactorConfig, Method, ParamSet};
use crate::matcore::DataMatrix;
use crate::mio::{self, Format, ReadOptions, SummaryDocument};
use crate::multirun::{rank_sweep, RankSweepConfig};
use crate::quality::{FitSummary, SparsenessAxis};
use crate::seeding::SeedSpec;

const SEED_NAMES: [&str; 7] = ["random", "fixed", "random_c", "random_vcol", "nndsvd", "nndsvda", "nndsvdar"];

#[derive(Debug, Parser)]
#[command(name = "nmfkit", version, about = "Nonnegative matrix factorization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factorize one matrix and write W.mtx, H.mtx and summary.json.
    Factorize(FactorizeArgs),
    /// Estimate the rank from the stability of repeated runs.
    RankEstimate(RankEstimateArgs),
    /// Generate a block-structured synthetic matrix.
    Synth(SynthArgs),
    /// Convert a matrix between MatrixMarket and CSV.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input matrix (.mtx or .csv).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_name = "mtx|csv")]
    format: Option<Format>,
    /// Divide V by its largest entry before factorizing.
    #[arg(long)]
    scale_unit: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Seeding method: random, fixed, random_c, random_vcol, nndsvd, nndsvda, nndsvdar.
    #[arg(long, default_value = "random_vcol", value_parser = clap::builder::PossibleValuesParser::new(SEED_NAMES))]
    seed: String,
    /// Initial W for `--seed fixed` (MatrixMarket or CSV).
    #[arg(long, value_name = "PATH", requires = "init_h")]
    init_w: Option<PathBuf>,
    /// Initial H for `--seed fixed` (MatrixMarket or CSV).
    #[arg(long, value_name = "PATH", requires = "init_w")]
    init_h: Option<PathBuf>,
    /// Maximum number of iterations.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    /// Stop when one iteration improves the objective by less than this fraction (0 disables).
    #[arg(long, default_value_t = 1e-5)]
    min_residual_delta: f64,
    /// Stop after H's cluster assignments are unchanged this many iterations (0 disables).
    #[arg(long, default_value_t = 30)]
    conn_change: usize,
    /// Master seed for every random choice.
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Method parameter as key=value (repeatable), e.g. theta=0.5, beta=1e-4.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
struct FactorizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Factorization method: nmf-eu, nmf-kl, lsnmf, snmf-l, snmf-r, nsnmf, bmf, bd, icm.
    #[arg(long)]
    method: Method,
    /// Factorization rank (>= 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rank: u64,
    #[command(flatten)]
    run: RunArgs,
    /// Directory receiving W.mtx, H.mtx and summary.json.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Record the objective after every iteration in summary.json.
    #[arg(long)]
    track_error: bool,
    /// Axis the sparseness measure averages over.
    #[arg(long, default_value = "columns", value_parser = ["columns", "rows"])]
    sparseness_axis: String,
    /// Record wall-clock time in summary.json (otherwise 0, keeping output reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct RankEstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Candidate ranks as A..B (inclusive) or a,b,c.
    #[arg(long, value_parser = parse_ranks)]
    ranks: RankList,
    /// Factorizations per rank.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// Worker threads (default: all cores).
    #[arg(long, env = "NMFKIT_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Factorization method.
    #[arg(long, default_value = "nmf-kl")]
    method: Method,
    #[command(flatten)]
    run: RunArgs,
    /// Directory receiving consensus_report.json and consensus_report.csv.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Debug, Clone)]
struct RankList(Vec<usize>);

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of rows.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rows: u64,
    /// Number of columns.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    cols: u64,
    /// Number of blocks (true rank).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rank: u64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Fraction of entries kept nonzero, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for V.mtx.
    #[arg(long, value_name = "DIR")]
    output: PathBuf,
    /// Also write the ground-truth factors W_true.mtx and H_true.mtx.
    #[arg(long)]
    emit_truth: bool,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Source matrix.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Destination file.
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Target format.
    #[arg(long, value_name = "mtx|csv")]
    to: Format,
    /// Source format; inferred from the extension when omitted.
    #[arg(long, value_name = "mtx|csv")]
    from: Option<Format>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let key = key.trim();
    if !ParamSet::KEYS.contains(&key) {
        return Err(format!("unknown parameter '{key}' (known: {})", ParamSet::KEYS.join(", ")));
    }
    let value: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
    Ok((key.to_string(), value))
}

fn parse_ranks(s: &str) -> Result<RankList, String> {
    let number = |t: &str| -> Result<usize, String> {
        match t.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("'{t}' is not a rank >= 1")),
        }
    };
    let ranks = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (number(a)?, number(b)?);
            if a > b {
                return Err(format!("empty range {a}..{b}"));
            }
            (a..=b).collect()
        }
        None => s.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
    };
    Ok(RankList(ranks))
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Factorize(a) => cmd_factorize(a),
        Command::RankEstimate(a) => cmd_rank_estimate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Convert(a) => cmd_convert(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

fn format_of(path: &Path, explicit: Option<Format>) -> Result<Format, Failure> {
    match explicit {
        Some(f) => Ok(f),
        None => Format::from_path(path).map_err(|e| usage(e.to_string())),
    }
}

fn load_input(args: &InputArgs) -> Result<DataMatrix, Failure> {
    let format = format_of(&args.input, args.format)?;
    let v = mio::read_matrix(&args.input, format, ReadOptions::default())?;
    Ok(if args.scale_unit { mio::scale_unit(&v) } else { v })
}

fn build_config(method: Method, rank: usize, run: &RunArgs) -> Result<FactorConfig, Failure> {
    let mut config = FactorConfig::new(method, rank);
    config.max_iter = run.max_iter as usize;
    config.conn_change = run.conn_change;
    config.master_seed = run.master_seed;
    if !(run.min_residual_delta >= 0.0 && run.min_residual_delta.is_finite()) {
        return Err(usage("--min-residual-delta must be finite and >= 0"));
    }
    config.min_residual_delta = run.min_residual_delta;
    for (key, value) in &run.params {
        config.params.set(key, *value).map_err(|e| usage(e.to_string()))?;
    }
    config.params.validate().map_err(|e| usage(e.to_string()))?;
    config.seed = match (run.seed.as_str(), &run.init_w, &run.init_h) {
        ("fixed", Some(w), Some(h)) => {
            let read = |p: &PathBuf| -> Result<_, Failure> {
                Ok(mio::read_matrix(p, format_of(p, None)?, ReadOptions::default())?.to_dense())
            };
            SeedSpec::Fixed { w: read(w)?, h: read(h)? }
        }
        ("fixed", _, _) => return Err(usage("--seed fixed needs --init-w and --init-h")),
        (_, Some(_), _) => return Err(usage("--init-w/--init-h only apply to --seed fixed")),
        (name, _, _) => SeedSpec::from_name(name).map_err(|e| usage(e.to_string()))?,
    };
    Ok(config)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn cmd_factorize(args: FactorizeArgs) -> Result<(), Failure> {
    let mut config = build_config(args.method, args.rank as usize, &args.run)?;
    config.track_error = args.track_error;
    let axis: SparsenessAxis = args.sparseness_axis.parse()?;
    let v = load_input(&args.input)?;

    let start = Instant::now();
    let (model, trace) = factorize(&v, &config)?;
    let elapsed = start.elapsed().as_millis() as u64;
    let fit = FitSummary::compute(&v, &model, axis)?;
    let doc = SummaryDocument::new(&config, &model, &fit, &trace, if args.timing { elapsed } else { 0 });

    create_dir(&args.output_dir)?;
    mio::write_matrix(&DataMatrix::Dense(model.w.clone()), &args.output_dir.join("W.mtx"), Format::Mtx)?;
    mio::write_matrix(&DataMatrix::Dense(model.h.clone()), &args.output_dir.join("H.mtx"), Format::Mtx)?;
    mio::write_summary(&doc, &args.output_dir.join("summary.json"))?;

    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{} rank {}: {} iterations, objective {:.6e}", model.method, model.rank(), model.n_iter, model.final_objective);
    let _ = writeln!(out, "Rss: {:.4}, Evar: {:.4}", fit.rss, fit.evar);
    let _ = writeln!(out, "K-L divergence: {:.4}", fit.dist_kl);
    let _ = writeln!(out, "Sparseness, W: {:.4}, H: {:.4}", fit.sparseness_w, fit.sparseness_h);
    Ok(())
}

fn cmd_rank_estimate(args: RankEstimateArgs) -> Result<(), Failure> {
    let base = build_config(args.method, 1, &args.run)?;
    let v = load_input(&args.input)?;
    let sweep = RankSweepConfig {
        ranks: args.ranks.0,
        runs_per_rank: args.runs as usize,
        base,
        master_seed: args.run.master_seed,
        threads: args.threads.map(|t| t as usize),
    };
    let report = rank_sweep(&v, &sweep)?;
    create_dir(&args.output_dir)?;
    mio::write_report(&report, &args.output_dir)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "rank  cophenetic  dispersion  mean_evar");
    for r in &report.records {
        let _ = writeln!(out, "{:>4}  {:>10.4}  {:>10.4}  {:>9.4}", r.rank, r.cophenetic, r.dispersion, r.mean_evar);
    }
    let _ = writeln!(out, "Recommended rank: {}", report.recommended_rank);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let data = mio::synth(args.rows as usize, args.cols as usize, args.rank as usize, args.noise, args.density, args.seed)
        .map_err(|e| usage(e.to_string()))?;
    create_dir(&args.output)?;
    mio::write_matrix(&data.v, &args.output.join("V.mtx"), Format::Mtx)?;
    if args.emit_truth {
        mio::write_matrix(&DataMatrix::Dense(data.w), &args.output.join("W_true.mtx"), Format::Mtx)?;
        mio::write_matrix(&DataMatrix::Dense(data.h), &args.output.join("H_true.mtx"), Format::Mtx)?;
    }
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<(), Failure> {
    let from = format_of(&args.input, args.from)?;
    let m = mio::read_matrix(&args.input, from, ReadOptions { allow_negative: true })?;
    mio::write_matrix(&m, &args.output, args.to)?;
    Ok(())
}
