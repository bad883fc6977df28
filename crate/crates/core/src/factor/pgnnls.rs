//! Projected-gradient solver for `min_{X ≥ 0} ½‖A·X − B‖²F`.
//!
//! Armijo search runs along the projection arc `X(α) = max(0, X − α∇f)`.
//! The step size carries over between iterations: the first trial either
//! shrinks α by `armijo_beta` until sufficient decrease holds, or grows it
//! while sufficient decrease keeps holding.

use crate::error::{Error, Result};
use crate::matcore::Dense;

const MAX_LINE_SEARCH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgOptions {
    /// Absolute bound on the projected-gradient Frobenius norm.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo_beta: f64,
    pub armijo_sigma: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions { tol: 1e-8, max_iter: 1000, armijo_beta: 0.1, armijo_sigma: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct PgOutcome {
    pub x: Dense,
    /// Gradient `AᵀA·X − AᵀB` at the returned X.
    pub grad: Dense,
    /// Iteration at which the stopping test passed (1 = the start was
    /// already optimal), or `max_iter` if it never did.
    pub iterations: usize,
    pub proj_grad_norm: f64,
}

pub fn pg_nnls(a: &Dense, b: &Dense, x0: &Dense, opts: &PgOptions) -> Result<PgOutcome> {
    if a.rows() != b.rows() || x0.shape() != (a.cols(), b.cols()) {
        return Err(Error::Shape(format!(
            "pg_nnls: A {}x{}, B {}x{}, X0 {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            x0.rows(),
            x0.cols()
        )));
    }
    let gram = a.t_matmul(a)?;
    let atb = a.t_matmul(b)?;
    pg_nnls_gram(&gram, &atb, x0, opts)
}

/// Same problem given `Q = AᵀA` (k×k) and `AᵀB` (k×n). Penalized and stacked
/// systems only change Q and AᵀB, so callers build those directly.
pub fn pg_nnls_gram(gram: &Dense, atb: &Dense, x0: &Dense, opts: &PgOptions) -> Result<PgOutcome> {
    let k = gram.rows();
    if gram.cols() != k || atb.rows() != k || x0.shape() != atb.shape() {
        return Err(Error::Shape(format!(
            "pg_nnls: Q {}x{}, AtB {}x{}, X0 {}x{}",
            gram.rows(),
            gram.cols(),
            atb.rows(),
            atb.cols(),
            x0.rows(),
            x0.cols()
        )));
    }
    if !(opts.armijo_beta > 0.0 && opts.armijo_beta < 1.0)
        || !(opts.armijo_sigma > 0.0 && opts.armijo_sigma < 1.0)
        || opts.max_iter == 0
    {
        return Err(Error::Param(format!("invalid projected-gradient options {opts:?}")));
    }

    let mut x = x0.clone();
    let mut alpha = 1.0;
    let mut grad = gradient(gram, atb, &x)?;
    let mut pg_norm = projected_norm(&grad, &x);
    let mut iterations = opts.max_iter;

    for iter in 1..=opts.max_iter {
        if iter > 1 {
            grad = gradient(gram, atb, &x)?;
            pg_norm = projected_norm(&grad, &x);
        }
        if pg_norm <= opts.tol {
            iterations = iter;
            break;
        }

        let mut prev_trial: Option<Dense> = None;
        let mut shrinking = false;
        for trial in 0..MAX_LINE_SEARCH {
            let xn = x.zip_with(&grad, "pg_step", |xi, gi| (xi - alpha * gi).max(0.0))?;
            let sufficient = sufficient_decrease(gram, &grad, &x, &xn, opts.armijo_sigma)?;
            if trial == 0 {
                shrinking = !sufficient;
            }
            if shrinking {
                if sufficient {
                    x = xn;
                    break;
                }
                alpha *= opts.armijo_beta;
            } else {
                let stalled = prev_trial.as_ref().is_some_and(|p| *p == xn);
                if !sufficient || stalled {
                    if let Some(p) = prev_trial.take() {
                        x = p;
                    }
                    break;
                }
                alpha /= opts.armijo_beta;
                prev_trial = Some(xn);
            }
        }
        if let Some(p) = prev_trial {
            // Growth never failed within the trial budget.
            x = p;
        }
    }

    if iterations == opts.max_iter {
        grad = gradient(gram, atb, &x)?;
        pg_norm = projected_norm(&grad, &x);
    }
    Ok(PgOutcome { x, grad, iterations, proj_grad_norm: pg_norm })
}

pub(crate) fn gradient(gram: &Dense, atb: &Dense, x: &Dense) -> Result<Dense> {
    gram.matmul(x)?.sub(atb)
}

/// ‖∇ᴾf‖F with ∇ᴾᵢⱼ = ∇ᵢⱼ where Xᵢⱼ > 0, else min(0, ∇ᵢⱼ).
pub fn projected_norm(grad: &Dense, x: &Dense) -> f64 {
    grad.as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(&g, &xi)| if xi > 0.0 || g < 0.0 { g * g } else { 0.0 })
        .sum::<f64>()
        .sqrt()
}

/// f(Xn) − f(X) ≤ σ·⟨∇f, Xn − X⟩, using the exact quadratic expansion
/// f(X + D) − f(X) = ⟨∇f, D⟩ + ½⟨D, Q·D⟩.
fn sufficient_decrease(gram: &Dense, grad: &Dense, x: &Dense, xn: &Dense, sigma: f64) -> Result<bool> {
    let d = xn.sub(x)?;
    let gd: f64 = grad.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a * b).sum();
    let qd = gram.matmul(&d)?;
    let dqd: f64 = qd.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a * b).sum();
    Ok((1.0 - sigma) * gd + 0.5 * dqd < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kkt_two_variable_case() {
        let a = Dense::identity(2);
        let b = Dense::from_rows(&[[-1.0], [2.0]]);
        let x0 = Dense::from_rows(&[[1.0], [1.0]]);
        let out = pg_nnls(&a, &b, &x0, &PgOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(out.x.max_abs_diff(&Dense::from_rows(&[[0.0], [2.0]])).unwrap() < 1e-12);
    }

    #[test]
    fn feasible_unconstrained_optimum() {
        let b = Dense::from_rows(&[[0.5, 3.0], [1.0, 0.0], [2.0, 0.25]]);
        let out = pg_nnls(&Dense::identity(3), &b, &Dense::filled(3, 2, 1.0), &PgOptions::default()).unwrap();
        assert!(out.x.max_abs_diff(&b).unwrap() < 1e-10);
    }

    #[test]
    fn stopping_contract_holds() {
        let a = Dense::from_rows(&[[1.0, 0.2], [0.3, 1.0], [0.5, 0.5]]);
        let b = Dense::from_rows(&[[1.0, -0.5], [0.2, 1.0], [0.0, 0.4]]);
        let opts = PgOptions { tol: 1e-9, ..Default::default() };
        let out = pg_nnls(&a, &b, &Dense::filled(2, 2, 0.5), &opts).unwrap();
        assert!(out.proj_grad_norm <= opts.tol);
        assert!(out.iterations < opts.max_iter);
        assert!(out.x.is_nonnegative());
    }

    #[test]
    fn optimal_start_reports_one_iteration() {
        let b = Dense::from_rows(&[[1.0], [2.0]]);
        let out = pg_nnls(&Dense::identity(2), &b, &b, &PgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b);
    }

    #[test]
    fn shape_errors() {
        let err = pg_nnls(&Dense::identity(2), &Dense::zeros(3, 1), &Dense::zeros(2, 1), &PgOptions::default());
        assert_eq!(err.unwrap_err().kind(), "shape");
    }
}
