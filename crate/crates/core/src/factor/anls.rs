//! Alternating nonnegative least squares with projected-gradient subproblems.
//!
//! Plain ANLS (`lsnmf`) and the sparse variants (`snmf-l`, `snmf-r`) differ
//! only in the Gram matrices of the two subproblems: the stacked systems
//! `[W; √β·1ᵀ]` and `[Hᵀ; √η·I]` contribute `β·11ᵀ` and `η·I` to `AᵀA` and
//! nothing to `AᵀB`.

use crate::error::{Error, Result};
use crate::matcore::{residual_sq, DataMatrix, Dense};

use super::pgnnls::{gradient, pg_nnls_gram, PgOptions};

/// Which factor carries the sparsity penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseSide {
    /// Sparse W (`snmf-l`).
    Left,
    /// Sparse H (`snmf-r`).
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnlsPenalty {
    pub side: SparseSide,
    /// Weight on the squared Frobenius norm of the dense factor.
    pub eta: f64,
    /// Weight on the squared L1 norms of the sparse factor's columns
    /// (rows of W for the left side).
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnlsOptions {
    pub pg_tol: f64,
    pub inner_max_iter: usize,
    pub armijo_beta: f64,
    pub armijo_sigma: f64,
}

/// Outer-iteration state: the adaptive subproblem tolerances.
#[derive(Debug, Clone)]
pub struct AnlsState {
    pub penalty: Option<AnlsPenalty>,
    pub opts: AnlsOptions,
    pub tol_h: f64,
    pub tol_w: f64,
}

impl AnlsState {
    /// Tolerances start at max(1e-3, pg_tol)·‖∇f(W⁰, H⁰)‖F.
    pub fn new(
        v: &DataMatrix,
        w: &Dense,
        h: &Dense,
        penalty: Option<AnlsPenalty>,
        opts: AnlsOptions,
    ) -> Result<Self> {
        if let Some(p) = penalty {
            if !(p.eta >= 0.0 && p.beta >= 0.0 && p.eta.is_finite() && p.beta.is_finite()) {
                return Err(Error::Param(format!("snmf penalties must be finite and >= 0: {p:?}")));
            }
        }
        let mut st = AnlsState { penalty, opts, tol_h: 0.0, tol_w: 0.0 };
        let (gh, gw) = (st.h_problem(v, w)?, st.w_problem(v, h)?);
        let grad_h = gradient(&gh.0, &gh.1, h)?;
        let grad_w = gradient(&gw.0, &gw.1, &w.transpose())?;
        let init = (grad_h.frobenius_sq() + grad_w.frobenius_sq()).sqrt();
        let tol = opts.pg_tol.max(1e-3) * init;
        st.tol_h = tol;
        st.tol_w = tol;
        Ok(st)
    }

    /// (AᵀA, AᵀB) of the H subproblem.
    fn h_problem(&self, v: &DataMatrix, w: &Dense) -> Result<(Dense, Dense)> {
        let mut gram = w.t_matmul(w)?;
        match self.penalty {
            Some(AnlsPenalty { side: SparseSide::Right, beta, .. }) => add_all(&mut gram, beta),
            Some(AnlsPenalty { side: SparseSide::Left, eta, .. }) => add_diag(&mut gram, eta),
            None => {}
        }
        Ok((gram, v.wt_mul(w)?))
    }

    /// (AᵀA, AᵀB) of the W subproblem, solved for Wᵀ.
    fn w_problem(&self, v: &DataMatrix, h: &Dense) -> Result<(Dense, Dense)> {
        let mut gram = h.matmul_t(h)?;
        match self.penalty {
            Some(AnlsPenalty { side: SparseSide::Right, eta, .. }) => add_diag(&mut gram, eta),
            Some(AnlsPenalty { side: SparseSide::Left, beta, .. }) => add_all(&mut gram, beta),
            None => {}
        }
        Ok((gram, v.mul_dense(&h.transpose())?.transpose()))
    }

    fn pg(&self, tol: f64) -> PgOptions {
        PgOptions {
            tol,
            max_iter: self.opts.inner_max_iter,
            armijo_beta: self.opts.armijo_beta,
            armijo_sigma: self.opts.armijo_sigma,
        }
    }

    /// One outer alternation, H first. A subproblem that is already solved
    /// at its first inner iteration tightens its tolerance tenfold.
    pub fn iterate(&mut self, v: &DataMatrix, w: &Dense, h: &Dense) -> Result<(Dense, Dense)> {
        let (gram, atb) = self.h_problem(v, w)?;
        let out_h = pg_nnls_gram(&gram, &atb, h, &self.pg(self.tol_h))?;
        if out_h.iterations == 1 {
            self.tol_h *= 0.1;
        }
        let h_new = out_h.x;

        let (gram, atb) = self.w_problem(v, &h_new)?;
        let out_w = pg_nnls_gram(&gram, &atb, &w.transpose(), &self.pg(self.tol_w))?;
        if out_w.iterations == 1 {
            self.tol_w *= 0.1;
        }
        Ok((out_w.x.transpose(), h_new))
    }

    /// ‖V − WH‖²F plus the active penalty terms.
    pub fn objective(&self, v: &DataMatrix, w: &Dense, h: &Dense) -> Result<f64> {
        let base = residual_sq(v, &w.matmul(h)?)?;
        Ok(match self.penalty {
            None => base,
            Some(p) => base + snmf_penalty(w, h, p),
        })
    }
}

pub(crate) fn snmf_penalty(w: &Dense, h: &Dense, p: AnlsPenalty) -> f64 {
    match p.side {
        SparseSide::Right => {
            p.eta * w.frobenius_sq() + p.beta * h.col_sums().iter().map(|s| s * s).sum::<f64>()
        }
        SparseSide::Left => {
            p.eta * h.frobenius_sq() + p.beta * w.row_sums().iter().map(|s| s * s).sum::<f64>()
        }
    }
}

fn add_all(gram: &mut Dense, c: f64) {
    if c != 0.0 {
        gram.map_inplace(|x| x + c);
    }
}

fn add_diag(gram: &mut Dense, c: f64) {
    if c != 0.0 {
        for a in 0..gram.rows() {
            let x = gram.get(a, a);
            gram.set(a, a, x + c);
        }
    }
}

/// One `lsnmf` alternation with fresh tolerance state.
pub fn lsnmf_iterate(v: &DataMatrix, w: &Dense, h: &Dense, opts: AnlsOptions) -> Result<(Dense, Dense)> {
    AnlsState::new(v, w, h, None, opts)?.iterate(v, w, h)
}

/// One sparse-NMF alternation with fresh tolerance state.
pub fn snmf_iterate(
    v: &DataMatrix,
    w: &Dense,
    h: &Dense,
    penalty: AnlsPenalty,
    opts: AnlsOptions,
) -> Result<(Dense, Dense)> {
    AnlsState::new(v, w, h, Some(penalty), opts)?.iterate(v, w, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::RngStream;

    const OPTS: AnlsOptions = AnlsOptions { pg_tol: 1e-4, inner_max_iter: 20, armijo_beta: 0.1, armijo_sigma: 0.01 };

    fn random(m: usize, n: usize, rng: &mut RngStream) -> Dense {
        Dense::from_fn(m, n, |_, _| rng.uniform())
    }

    #[test]
    fn exact_factorization_is_stationary() {
        let mut rng = RngStream::new(2);
        let (w0, h0) = (random(6, 2, &mut rng), random(2, 5, &mut rng));
        let v = DataMatrix::Dense(w0.matmul(&h0).unwrap());
        let (w, h) = lsnmf_iterate(&v, &w0, &h0, OPTS).unwrap();
        assert!(w.max_abs_diff(&w0).unwrap() < 1e-10);
        assert!(h.max_abs_diff(&h0).unwrap() < 1e-10);
    }

    #[test]
    fn zero_penalties_match_plain_anls() {
        let mut rng = RngStream::new(5);
        let v = DataMatrix::Dense(random(9, 7, &mut rng));
        let (w, h) = (random(9, 3, &mut rng), random(3, 7, &mut rng));
        let plain = lsnmf_iterate(&v, &w, &h, OPTS).unwrap();
        for side in [SparseSide::Left, SparseSide::Right] {
            let pen = AnlsPenalty { side, eta: 0.0, beta: 0.0 };
            assert_eq!(snmf_iterate(&v, &w, &h, pen, OPTS).unwrap(), plain);
        }
    }

    #[test]
    fn objectives_never_increase() {
        let mut rng = RngStream::new(8);
        let v = DataMatrix::Dense(random(12, 10, &mut rng));
        let penalties = [
            None,
            Some(AnlsPenalty { side: SparseSide::Right, eta: 1.0, beta: 0.5 }),
            Some(AnlsPenalty { side: SparseSide::Left, eta: 0.3, beta: 2.0 }),
        ];
        for pen in penalties {
            let (mut w, mut h) = (random(12, 3, &mut rng), random(3, 10, &mut rng));
            let mut st = AnlsState::new(&v, &w, &h, pen, OPTS).unwrap();
            let mut prev = st.objective(&v, &w, &h).unwrap();
            for _ in 0..40 {
                (w, h) = st.iterate(&v, &w, &h).unwrap();
                let obj = st.objective(&v, &w, &h).unwrap();
                assert!(obj <= prev + 1e-10, "{pen:?}: {obj} > {prev}");
                assert!(w.is_nonnegative() && h.is_nonnegative());
                prev = obj;
            }
        }
    }
}
