//! The optimization engine: method iterations, objectives and stopping rules.

pub mod anls;
pub mod bayes;
pub mod bmf;
pub mod mu;
pub mod nsnmf;
pub mod pgnnls;
pub mod stop;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{kl_div, kl_div_floored, residual_sq, DataMatrix, Dense, RngStream, EPS};
use crate::seeding::{check_rank, SeedSpec};

use anls::{AnlsOptions, AnlsPenalty, AnlsState, SparseSide};
use bayes::Priors;
use bmf::LambdaSchedule;
use stop::ConnectivityStop;

pub use anls::{lsnmf_iterate, snmf_iterate};
pub use bayes::{bd_gibbs_step, icm_step, sample_rectified_normal};
pub use bmf::bmf_iterate;
pub use mu::{mu_eu_step, mu_kl_step};
pub use nsnmf::{nsnmf_iterate, nsnmf_smoothing};
pub use pgnnls::{pg_nnls, PgOptions, PgOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "nmf-eu")]
    NmfEu,
    #[serde(rename = "nmf-kl")]
    NmfKl,
    #[serde(rename = "lsnmf")]
    Lsnmf,
    #[serde(rename = "snmf-l")]
    SnmfL,
    #[serde(rename = "snmf-r")]
    SnmfR,
    #[serde(rename = "nsnmf")]
    Nsnmf,
    #[serde(rename = "bmf")]
    Bmf,
    #[serde(rename = "bd")]
    Bd,
    #[serde(rename = "icm")]
    Icm,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::NmfEu,
        Method::NmfKl,
        Method::Lsnmf,
        Method::SnmfL,
        Method::SnmfR,
        Method::Nsnmf,
        Method::Bmf,
        Method::Bd,
        Method::Icm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NmfEu => "nmf-eu",
            Method::NmfKl => "nmf-kl",
            Method::Lsnmf => "lsnmf",
            Method::SnmfL => "snmf-l",
            Method::SnmfR => "snmf-r",
            Method::Nsnmf => "nsnmf",
            Method::Bmf => "bmf",
            Method::Bd => "bd",
            Method::Icm => "icm",
        }
    }

    pub fn objective_kind(self) -> ObjectiveKind {
        match self {
            Method::NmfKl | Method::Nsnmf => ObjectiveKind::Kl,
            Method::SnmfL | Method::SnmfR | Method::Bmf => ObjectiveKind::Penalized,
            Method::NmfEu | Method::Lsnmf | Method::Bd | Method::Icm => ObjectiveKind::Euclidean,
        }
    }

    /// Methods whose updates only rescale entries, so exact zeros persist.
    pub fn is_multiplicative(self) -> bool {
        matches!(self, Method::NmfEu | Method::NmfKl | Method::Nsnmf | Method::Bmf)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Method(s.to_string()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Euclidean,
    Kl,
    Penalized,
}

/// Method-specific parameters. Fields irrelevant to the chosen method are
/// ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    /// nsnmf smoothing θ ∈ [0, 1].
    pub theta: f64,
    /// snmf weight on the dense factor; `None` means (max V)².
    pub eta: Option<f64>,
    /// snmf sparsity weight.
    pub beta: f64,
    pub lambda0: f64,
    pub lambda_growth: f64,
    pub lambda_period: usize,
    pub lambda_max: f64,
    pub alpha_rate: f64,
    pub beta_rate: f64,
    pub sigma_shape: f64,
    pub sigma_scale: f64,
    /// bd samples discarded before averaging; `None` means max_iter / 2.
    pub burn_in: Option<usize>,
    pub pg_tol: f64,
    pub inner_max_iter: usize,
    pub armijo_beta: f64,
    pub armijo_sigma: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        let lambda = LambdaSchedule::default();
        ParamSet {
            theta: 0.5,
            eta: None,
            beta: 1e-4,
            lambda0: lambda.initial,
            lambda_growth: lambda.growth,
            lambda_period: lambda.period,
            lambda_max: lambda.max,
            alpha_rate: 0.0,
            beta_rate: 0.0,
            sigma_shape: 0.0,
            sigma_scale: 0.0,
            burn_in: None,
            pg_tol: 1e-4,
            inner_max_iter: 20,
            armijo_beta: 0.1,
            armijo_sigma: 0.01,
        }
    }
}

impl ParamSet {
    pub const KEYS: [&'static str; 16] = [
        "theta",
        "eta",
        "beta",
        "lambda0",
        "lambda_growth",
        "lambda_period",
        "lambda_max",
        "alpha_rate",
        "beta_rate",
        "sigma_shape",
        "sigma_scale",
        "burn_in",
        "pg_tol",
        "inner_max_iter",
        "armijo_beta",
        "armijo_sigma",
    ];

    /// Sets one parameter by name; count-valued keys need whole numbers.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::Param(format!("{key} must be a whole number, got {value}")))
            }
        };
        match key {
            "theta" => self.theta = value,
            "eta" => self.eta = Some(value),
            "beta" => self.beta = value,
            "lambda0" => self.lambda0 = value,
            "lambda_growth" => self.lambda_growth = value,
            "lambda_period" => self.lambda_period = count()?,
            "lambda_max" => self.lambda_max = value,
            "alpha_rate" => self.alpha_rate = value,
            "beta_rate" => self.beta_rate = value,
            "sigma_shape" => self.sigma_shape = value,
            "sigma_scale" => self.sigma_scale = value,
            "burn_in" => self.burn_in = Some(count()?),
            "pg_tol" => self.pg_tol = value,
            "inner_max_iter" => self.inner_max_iter = count()?,
            "armijo_beta" => self.armijo_beta = value,
            "armijo_sigma" => self.armijo_sigma = value,
            other => return Err(Error::Param(format!("unknown parameter '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Param(what.to_string()));
        let reals = [
            self.theta,
            self.eta.unwrap_or(0.0),
            self.beta,
            self.lambda0,
            self.lambda_growth,
            self.lambda_max,
            self.alpha_rate,
            self.beta_rate,
            self.sigma_shape,
            self.sigma_scale,
            self.pg_tol,
            self.armijo_beta,
            self.armijo_sigma,
        ];
        if reals.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if self.eta.is_some_and(|e| e < 0.0) || self.beta < 0.0 {
            return bad("eta and beta must be >= 0");
        }
        if self.lambda0 <= 0.0 || self.lambda_growth < 1.0 || self.lambda_period == 0 || self.lambda_max < self.lambda0 {
            return bad("lambda schedule needs lambda0 > 0, lambda_growth >= 1, lambda_period >= 1, lambda_max >= lambda0");
        }
        if [self.alpha_rate, self.beta_rate, self.sigma_shape, self.sigma_scale].iter().any(|&x| x < 0.0) {
            return bad("prior parameters must be >= 0");
        }
        if self.pg_tol <= 0.0 || self.inner_max_iter == 0 {
            return bad("pg_tol must be > 0 and inner_max_iter >= 1");
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0 && self.armijo_sigma > 0.0 && self.armijo_sigma < 1.0) {
            return bad("armijo_beta and armijo_sigma must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn lambda_schedule(&self) -> LambdaSchedule {
        LambdaSchedule {
            initial: self.lambda0,
            growth: self.lambda_growth,
            period: self.lambda_period,
            max: self.lambda_max,
        }
    }

    pub fn priors(&self) -> Priors {
        Priors {
            alpha_rate: self.alpha_rate,
            beta_rate: self.beta_rate,
            sigma_shape: self.sigma_shape,
            sigma_scale: self.sigma_scale,
        }
    }

    pub fn anls_options(&self) -> AnlsOptions {
        AnlsOptions {
            pg_tol: self.pg_tol,
            inner_max_iter: self.inner_max_iter,
            armijo_beta: self.armijo_beta,
            armijo_sigma: self.armijo_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorConfig {
    pub method: Method,
    pub rank: usize,
    pub seed: SeedSpec,
    pub max_iter: usize,
    /// Stop when an iteration improves the objective by less than this
    /// fraction of its previous value. 0 disables the rule.
    pub min_residual_delta: f64,
    /// Stop once H's column assignments are unchanged for this many
    /// consecutive iterations. 0 disables the rule.
    pub conn_change: usize,
    pub track_error: bool,
    /// Snapshot the factors every N iterations.
    pub track_factors: Option<usize>,
    pub master_seed: u64,
    pub params: ParamSet,
}

impl FactorConfig {
    pub fn new(method: Method, rank: usize) -> Self {
        FactorConfig {
            method,
            rank,
            seed: SeedSpec::default(),
            max_iter: 200,
            min_residual_delta: 1e-5,
            conn_change: 30,
            track_error: false,
            track_factors: None,
            master_seed: 0,
            params: ParamSet::default(),
        }
    }

    /// Runs exactly `max_iter` iterations: both early-stopping rules off.
    pub fn without_early_stop(mut self) -> Self {
        self.min_residual_delta = 0.0;
        self.conn_change = 0;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub w: Dense,
    pub h: Dense,
    pub method: Method,
    /// Smoothing parameter of nsnmf models.
    pub theta: Option<f64>,
    pub n_iter: usize,
    pub final_objective: f64,
    pub objective_kind: ObjectiveKind,
}

impl FactorModel {
    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// W·H, or W·S(θ)·H for nsnmf models.
    pub fn reconstruction(&self) -> Result<Dense> {
        match self.theta {
            Some(theta) => self.w.matmul(&nsnmf_smoothing(theta, self.rank())?)?.matmul(&self.h),
            None => self.w.matmul(&self.h),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iter: usize,
    pub w: Dense,
    pub h: Dense,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    /// Method objective after each iteration (when error tracking is on).
    pub objective_per_iter: Vec<f64>,
    pub factor_snapshots: Vec<Snapshot>,
}

/// Euclidean (‖V − V̂‖²F) or KL cost of a model's reconstruction.
pub fn objective(v: &DataMatrix, model: &FactorModel, kind: ObjectiveKind) -> Result<f64> {
    let recon = model.reconstruction()?;
    match kind {
        ObjectiveKind::Euclidean => residual_sq(v, &recon),
        ObjectiveKind::Kl => kl_div(v, &recon),
        ObjectiveKind::Penalized => {
            Err(Error::Metric("penalized objectives depend on method parameters".into()))
        }
    }
}

enum Engine {
    Euclidean,
    Kl,
    Anls(AnlsState),
    Nsnmf { smoothing: Dense },
    Bmf { schedule: LambdaSchedule },
    Bd { priors: Priors, sigma2: f64, burn_in: usize, sum_w: Dense, sum_h: Dense, kept: usize },
    Icm { priors: Priors, sigma2: f64 },
}

impl Engine {
    fn new(v: &DataMatrix, config: &FactorConfig, w: &Dense, h: &Dense) -> Result<Self> {
        let p = &config.params;
        let eta = || p.eta.unwrap_or_else(|| v.max().powi(2));
        Ok(match config.method {
            Method::NmfEu => Engine::Euclidean,
            Method::NmfKl => Engine::Kl,
            Method::Lsnmf => Engine::Anls(AnlsState::new(v, w, h, None, p.anls_options())?),
            Method::SnmfL | Method::SnmfR => {
                let side = if config.method == Method::SnmfL { SparseSide::Left } else { SparseSide::Right };
                let penalty = AnlsPenalty { side, eta: eta(), beta: p.beta };
                Engine::Anls(AnlsState::new(v, w, h, Some(penalty), p.anls_options())?)
            }
            Method::Nsnmf => Engine::Nsnmf { smoothing: nsnmf_smoothing(p.theta, config.rank)? },
            Method::Bmf => {
                bmf::check_unit_interval(v)?;
                Engine::Bmf { schedule: p.lambda_schedule() }
            }
            Method::Bd => Engine::Bd {
                priors: p.priors(),
                sigma2: bayes::initial_sigma2(v, w, h)?,
                burn_in: p.burn_in.unwrap_or(config.max_iter / 2),
                sum_w: Dense::zeros(w.rows(), w.cols()),
                sum_h: Dense::zeros(h.rows(), h.cols()),
                kept: 0,
            },
            Method::Icm => Engine::Icm { priors: p.priors(), sigma2: bayes::initial_sigma2(v, w, h)? },
        })
    }

    fn step(&mut self, v: &DataMatrix, w: &Dense, h: &Dense, iter: usize, rng: &mut RngStream) -> Result<(Dense, Dense)> {
        match self {
            Engine::Euclidean => mu_eu_step(v, w, h),
            Engine::Kl => mu_kl_step(v, w, h),
            Engine::Anls(state) => state.iterate(v, w, h),
            Engine::Nsnmf { smoothing } => nsnmf_iterate(v, w, h, smoothing),
            Engine::Bmf { schedule } => bmf_iterate(v, w, h, schedule.at(iter)),
            Engine::Bd { priors, sigma2, burn_in, sum_w, sum_h, kept } => {
                let (w, h, s2) = bd_gibbs_step(v, w, h, *sigma2, priors, rng)?;
                *sigma2 = s2;
                if iter > *burn_in {
                    *sum_w = sum_w.add(&w)?;
                    *sum_h = sum_h.add(&h)?;
                    *kept += 1;
                }
                Ok((w, h))
            }
            Engine::Icm { priors, sigma2 } => {
                let (w, h, s2) = icm_step(v, w, h, *sigma2, priors)?;
                *sigma2 = s2;
                Ok((w, h))
            }
        }
    }

    /// Method objective with the parameters in effect at `iter`.
    fn objective(&self, v: &DataMatrix, w: &Dense, h: &Dense, iter: usize) -> Result<f64> {
        match self {
            Engine::Euclidean | Engine::Bd { .. } | Engine::Icm { .. } => residual_sq(v, &w.matmul(h)?),
            Engine::Kl => kl_div_floored(v, &w.matmul(h)?, EPS),
            Engine::Anls(state) => state.objective(v, w, h),
            Engine::Nsnmf { smoothing } => kl_div_floored(v, &w.matmul(smoothing)?.matmul(h)?, EPS),
            Engine::Bmf { schedule } => bmf::bmf_objective(v, w, h, schedule.at(iter.max(1))),
        }
    }

    /// Whether the objective at `iter` is comparable with the one at `iter - 1`.
    fn comparable(&self, iter: usize) -> bool {
        match self {
            Engine::Bd { .. } => false,
            Engine::Bmf { schedule } => schedule.is_final(iter) && schedule.at(iter) == schedule.at(iter.saturating_sub(1).max(1)),
            _ => true,
        }
    }

    /// Whether early stopping may fire at `iter`. Penalty continuation is
    /// unfinished until λ stops growing.
    fn may_stop(&self, iter: usize) -> bool {
        match self {
            Engine::Bd { .. } => false,
            Engine::Bmf { schedule } => schedule.is_final(iter),
            _ => true,
        }
    }

    fn finish(self, w: Dense, h: Dense) -> (Dense, Dense) {
        match self {
            Engine::Bd { sum_w, sum_h, kept, .. } if kept > 0 => {
                let inv = 1.0 / kept as f64;
                (sum_w.scale(inv), sum_h.scale(inv))
            }
            _ => (w, h),
        }
    }
}

/// Seeds the factors and iterates the configured method until a stopping
/// rule fires. Deterministic given `config.master_seed`.
pub fn factorize(v: &DataMatrix, config: &FactorConfig) -> Result<(FactorModel, RunTrace)> {
    let (m, n) = v.shape();
    check_rank(m, n, config.rank)?;
    v.validate_input()?;
    config.params.validate()?;
    if config.max_iter == 0 {
        return Err(Error::Param("max_iter must be >= 1".into()));
    }
    if !(config.min_residual_delta >= 0.0 && config.min_residual_delta.is_finite()) {
        return Err(Error::Param("min_residual_delta must be finite and >= 0".into()));
    }
    if config.method == Method::Bmf {
        bmf::check_unit_interval(v)?;
    }

    let mut rng = RngStream::new(config.master_seed);
    let (mut w, mut h) = config.seed.seed(v, config.rank, &mut rng)?;
    let mut engine = Engine::new(v, config, &w, &h)?;
    let mut trace = RunTrace::default();
    let mut conn = ConnectivityStop::new();
    let mut prev = engine.objective(v, &w, &h, 1)?;
    let mut n_iter = 0;

    for iter in 1..=config.max_iter {
        (w, h) = engine.step(v, &w, &h, iter, &mut rng)?;
        n_iter = iter;
        if !w.is_finite() || !h.is_finite() {
            return Err(Error::Numeric(format!("{} produced non-finite factors at iteration {iter}", config.method)));
        }
        let obj = engine.objective(v, &w, &h, iter)?;
        if config.track_error {
            trace.objective_per_iter.push(obj);
        }
        if let Some(every) = config.track_factors {
            if every > 0 && iter % every == 0 {
                trace.factor_snapshots.push(Snapshot { iter, w: w.clone(), h: h.clone() });
            }
        }
        let stalled = config.min_residual_delta > 0.0
            && engine.comparable(iter)
            && (obj == 0.0 || prev - obj < config.min_residual_delta * prev.abs());
        let stable = conn.update(&h, config.conn_change);
        prev = obj;
        if engine.may_stop(iter) && (stalled || stable) {
            break;
        }
    }

    let (w, h) = engine.finish(w, h);
    let theta = (config.method == Method::Nsnmf).then_some(config.params.theta);
    let mut model = FactorModel {
        w,
        h,
        method: config.method,
        theta,
        n_iter,
        final_objective: 0.0,
        objective_kind: config.method.objective_kind(),
    };
    model.final_objective = if config.method == Method::Bd {
        objective(v, &model, ObjectiveKind::Euclidean)?
    } else {
        prev
    };
    Ok((model, trace))
}
