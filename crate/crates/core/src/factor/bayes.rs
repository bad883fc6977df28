//! Bayesian NMF with a Gaussian likelihood, exponential priors on the
//! factors and an inverse-gamma prior on the noise variance.
//!
//! `bd` draws every conditional (Gibbs sampling); `icm` replaces each draw
//! with the conditional mode. Both sweep H before W, then update σ².

use rand::distributions::Distribution;
use rand_distr::Gamma;

use crate::error::{Error, Result};
use crate::matcore::{residual_sq, DataMatrix, Dense, RngStream};

/// Lower bound on σ².
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    /// Exponential rate on W entries.
    pub alpha_rate: f64,
    /// Exponential rate on H entries.
    pub beta_rate: f64,
    pub sigma_shape: f64,
    pub sigma_scale: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors { alpha_rate: 0.0, beta_rate: 0.0, sigma_shape: 0.0, sigma_scale: 0.0 }
    }
}

/// Normal(mu, var) conditioned on x ≥ 0, drawn by inverting the CDF on the
/// truncated interval.
pub fn sample_rectified_normal(mu: f64, var: f64, rng: &mut RngStream) -> Result<f64> {
    if !(var > 0.0 && var.is_finite()) || !mu.is_finite() {
        return Err(Error::Param(format!("rectified normal needs var > 0, got mu={mu} var={var}")));
    }
    let sd = var.sqrt();
    // x = mu + sd·z with z ≥ a. Sample y = −z ~ N(0,1) | y ≤ −a, whose CDF
    // mass Φ(−a) stays accurate deep in the tail.
    let a = -mu / sd;
    let mass = norm_cdf(-a);
    let u = rng.open_uniform();
    let z = if mass > 0.0 {
        -norm_inv_cdf(u * mass)
    } else {
        // Beyond double range: the truncated tail is ≈ a + Exp(1)/a.
        a - u.ln() / a
    };
    Ok((mu + sd * z).max(0.0))
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1): Acklam's rational approximation refined by one
/// Halley step.
pub(crate) fn norm_inv_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf == 0.0 {
        return x;
    }
    let u = (norm_cdf(x) - p) / pdf;
    x - u / (1.0 + 0.5 * x * u)
}

/// Mean of one entry's conditional: (data − Σ_{b≠a} cross·x − σ²·rate) / cross_aa.
fn conditional_mean(data_term: f64, others: f64, sigma2: f64, rate: f64, diag: f64) -> f64 {
    (data_term - others - sigma2 * rate) / diag
}

/// Updates H row by row; `draw(mean, var)` produces the new entry.
fn sweep_h(
    v: &DataMatrix,
    w: &Dense,
    h: &mut Dense,
    sigma2: f64,
    rate: f64,
    mut draw: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<()> {
    let cross = w.t_matmul(w)?;
    let data = v.wt_mul(w)?;
    let k = h.rows();
    for a in 0..k {
        let diag = cross.get(a, a);
        if diag <= 0.0 {
            continue;
        }
        for j in 0..h.cols() {
            let mut others = 0.0;
            for b in 0..k {
                if b != a {
                    others += cross.get(a, b) * h.get(b, j);
                }
            }
            let mean = conditional_mean(data.get(a, j), others, sigma2, rate, diag);
            h.set(a, j, draw(mean, sigma2 / diag)?);
        }
    }
    Ok(())
}

/// Updates W column by column.
fn sweep_w(
    v: &DataMatrix,
    w: &mut Dense,
    h: &Dense,
    sigma2: f64,
    rate: f64,
    mut draw: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<()> {
    let cross = h.matmul_t(h)?;
    let data = v.mul_dense(&h.transpose())?;
    let k = w.cols();
    for a in 0..k {
        let diag = cross.get(a, a);
        if diag <= 0.0 {
            continue;
        }
        for i in 0..w.rows() {
            let mut others = 0.0;
            for b in 0..k {
                if b != a {
                    others += w.get(i, b) * cross.get(b, a);
                }
            }
            let mean = conditional_mean(data.get(i, a), others, sigma2, rate, diag);
            w.set(i, a, draw(mean, sigma2 / diag)?);
        }
    }
    Ok(())
}

pub fn gibbs_sweep_h(v: &DataMatrix, w: &Dense, h: &mut Dense, sigma2: f64, rate: f64, rng: &mut RngStream) -> Result<()> {
    sweep_h(v, w, h, sigma2, rate, |mu, var| sample_rectified_normal(mu, var, rng))
}

pub fn gibbs_sweep_w(v: &DataMatrix, w: &mut Dense, h: &Dense, sigma2: f64, rate: f64, rng: &mut RngStream) -> Result<()> {
    sweep_w(v, w, h, sigma2, rate, |mu, var| sample_rectified_normal(mu, var, rng))
}

pub fn icm_update_h(v: &DataMatrix, w: &Dense, h: &mut Dense, sigma2: f64, rate: f64) -> Result<()> {
    sweep_h(v, w, h, sigma2, rate, |mu, _| Ok(mu.max(0.0)))
}

pub fn icm_update_w(v: &DataMatrix, w: &mut Dense, h: &Dense, sigma2: f64, rate: f64) -> Result<()> {
    sweep_w(v, w, h, sigma2, rate, |mu, _| Ok(mu.max(0.0)))
}

fn sigma2_posterior(v: &DataMatrix, w: &Dense, h: &Dense, priors: &Priors) -> Result<(f64, f64)> {
    let (m, n) = v.shape();
    let rss = residual_sq(v, &w.matmul(h)?)?;
    let shape = (m * n) as f64 / 2.0 + 1.0 + priors.sigma_shape;
    let scale = rss / 2.0 + priors.sigma_scale;
    Ok((shape, scale))
}

/// σ² ~ InvGamma(shape = mn/2 + 1 + sigma_shape, scale = ‖V−WH‖²/2 + sigma_scale).
pub fn sample_sigma2(v: &DataMatrix, w: &Dense, h: &Dense, priors: &Priors, rng: &mut RngStream) -> Result<f64> {
    let (shape, scale) = sigma2_posterior(v, w, h, priors)?;
    if scale <= 0.0 {
        return Ok(SIGMA2_FLOOR);
    }
    let gamma = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::Numeric(format!("inverse-gamma draw: {e}")))?;
    let g: f64 = gamma.sample(rng.inner_mut());
    Ok((1.0 / g).max(SIGMA2_FLOOR))
}

/// σ² ← (‖V−WH‖²/2 + sigma_scale) / (mn/2 + sigma_shape + 1).
pub fn icm_sigma2(v: &DataMatrix, w: &Dense, h: &Dense, priors: &Priors) -> Result<f64> {
    let (shape, scale) = sigma2_posterior(v, w, h, priors)?;
    Ok((scale / shape).max(SIGMA2_FLOOR))
}

/// σ² starting value ‖V − W⁰H⁰‖²/(mn).
pub fn initial_sigma2(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<f64> {
    let (m, n) = v.shape();
    Ok((residual_sq(v, &w.matmul(h)?)? / (m * n) as f64).max(SIGMA2_FLOOR))
}

pub fn bd_gibbs_step(
    v: &DataMatrix,
    w: &Dense,
    h: &Dense,
    sigma2: f64,
    priors: &Priors,
    rng: &mut RngStream,
) -> Result<(Dense, Dense, f64)> {
    let (mut w, mut h) = (w.clone(), h.clone());
    gibbs_sweep_h(v, &w, &mut h, sigma2, priors.beta_rate, rng)?;
    gibbs_sweep_w(v, &mut w, &h, sigma2, priors.alpha_rate, rng)?;
    let s2 = sample_sigma2(v, &w, &h, priors, rng)?;
    Ok((w, h, s2))
}

pub fn icm_step(v: &DataMatrix, w: &Dense, h: &Dense, sigma2: f64, priors: &Priors) -> Result<(Dense, Dense, f64)> {
    let (mut w, mut h) = (w.clone(), h.clone());
    icm_update_h(v, &w, &mut h, sigma2, priors.beta_rate)?;
    icm_update_w(v, &mut w, &h, sigma2, priors.alpha_rate)?;
    let s2 = icm_sigma2(v, &w, &h, priors)?;
    Ok((w, h, s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf_matches_forward_cdf() {
        for &p in &[1e-300, 1e-20, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            let x = norm_inv_cdf(p);
            let back = norm_cdf(x);
            assert!(((back - p) / p).abs() < 1e-10, "p={p} x={x} back={back}");
        }
    }

    #[test]
    fn rectified_draws_are_nonnegative() {
        let mut rng = RngStream::new(1);
        for &(mu, var) in &[(0.0, 1.0), (-50.0, 1.0), (-1e3, 1e-4), (3.0, 0.5), (1e-8, 1e-12)] {
            for _ in 0..500 {
                let x = sample_rectified_normal(mu, var, &mut rng).unwrap();
                assert!(x >= 0.0 && x.is_finite(), "mu={mu} var={var} x={x}");
            }
        }
    }

    #[test]
    fn deep_tail_mean_is_close_to_exponential_limit() {
        // For mu ≪ 0 the truncated normal approaches Exp(rate = −mu/var).
        let mut rng = RngStream::new(2);
        let (mu, var) = (-60.0, 1.0);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| sample_rectified_normal(mu, var, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1.0 / 60.0).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn invalid_variance() {
        let mut rng = RngStream::new(0);
        assert_eq!(sample_rectified_normal(0.0, 0.0, &mut rng).unwrap_err().kind(), "param");
        assert_eq!(sample_rectified_normal(0.0, -1.0, &mut rng).unwrap_err().kind(), "param");
    }

    #[test]
    fn icm_scalar_conditional_mean() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[2.0]]));
        let mut w = Dense::from_rows(&[[0.3]]);
        let h = Dense::from_rows(&[[1.0]]);
        icm_update_w(&v, &mut w, &h, 0.1, 0.0).unwrap();
        assert_eq!(w.get(0, 0), 2.0);
    }

    #[test]
    fn icm_clips_negative_means() {
        // A large exponential rate drives the conditional mean below zero.
        let v = DataMatrix::Dense(Dense::from_rows(&[[1.0]]));
        let mut w = Dense::from_rows(&[[0.5]]);
        let h = Dense::from_rows(&[[1.0]]);
        icm_update_w(&v, &mut w, &h, 1.0, 5.0).unwrap();
        assert_eq!(w.get(0, 0), 0.0);
    }

    #[test]
    fn icm_sigma2_on_exact_fit() {
        let w = Dense::from_rows(&[[1.0], [2.0]]);
        let h = Dense::from_rows(&[[3.0, 1.0]]);
        let v = DataMatrix::Dense(w.matmul(&h).unwrap());
        let priors = Priors { sigma_shape: 2.0, sigma_scale: 0.5, ..Default::default() };
        let s2 = icm_sigma2(&v, &w, &h, &priors).unwrap();
        assert!((s2 - 0.5 / (4.0 / 2.0 + 2.0 + 1.0)).abs() < 1e-15);
        assert_eq!(icm_sigma2(&v, &w, &h, &Priors::default()).unwrap(), SIGMA2_FLOOR);
    }

    #[test]
    fn degenerate_column_is_skipped() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
        let mut w = Dense::from_rows(&[[0.7, 0.2], [0.1, 0.9]]);
        let h = Dense::from_rows(&[[1.0, 1.0], [0.0, 0.0]]);
        let before = w.column(1);
        gibbs_sweep_w(&v, &mut w, &h, 0.1, 0.0, &mut RngStream::new(3)).unwrap();
        assert_eq!(w.column(1), before);
    }

    #[test]
    fn gibbs_chain_is_reproducible() {
        let mut rng = RngStream::new(9);
        let v = DataMatrix::Dense(Dense::from_fn(5, 4, |_, _| rng.uniform()));
        let w0 = Dense::filled(5, 2, 0.5);
        let h0 = Dense::filled(2, 4, 0.5);
        let run = |seed| {
            let mut rng = RngStream::new(seed);
            let (mut w, mut h, mut s2) = (w0.clone(), h0.clone(), 0.1);
            for _ in 0..20 {
                (w, h, s2) = bd_gibbs_step(&v, &w, &h, s2, &Priors::default(), &mut rng).unwrap();
                assert!(w.is_nonnegative() && h.is_nonnegative() && s2 > 0.0);
            }
            (w, h, s2)
        };
        let (a, b) = (run(4), run(4));
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2.to_bits(), b.2.to_bits());
    }
}
