//! Multiplicative updates for the Euclidean and KL costs.
//!
//! Each full step is the H half-step followed by the W half-step using the
//! freshly updated H. The half-steps are exposed separately because the
//! nonsmooth and binary variants reuse them with modified operands.

use crate::error::Result;
use crate::matcore::{DataMatrix, Dense, EPS};

/// H ← H ∘ (WᵀV) ⊘ (WᵀW·H).
pub fn eu_update_h(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<Dense> {
    let num = v.wt_mul(w)?;
    let den = w.t_matmul(w)?.matmul(h)?;
    h.hadamard(&num.safe_divide(&den, EPS)?)
}

/// W ← W ∘ (V·Hᵀ) ⊘ (W·H·Hᵀ).
pub fn eu_update_w(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<Dense> {
    let num = v.mul_dense(&h.transpose())?;
    let den = w.matmul(&h.matmul_t(h)?)?;
    w.hadamard(&num.safe_divide(&den, EPS)?)
}

pub fn mu_eu_step(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<(Dense, Dense)> {
    let h = eu_update_h(v, w, h)?;
    let w = eu_update_w(v, w, &h)?;
    Ok((w, h))
}

/// Hₐⱼ ← Hₐⱼ · Σᵢ Wᵢₐ Vᵢⱼ/(WH)ᵢⱼ / Σᵢ Wᵢₐ.
pub fn kl_update_h(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<Dense> {
    let ratio = v.ratio(&w.matmul(h)?, EPS)?;
    let num = ratio.wt_mul(w)?;
    let col_sums = w.col_sums();
    let mut out = h.clone();
    for a in 0..h.rows() {
        let inv = 1.0 / (col_sums[a] + EPS);
        for (x, &r) in out.row_mut(a).iter_mut().zip(num.row(a)) {
            *x *= r * inv;
        }
    }
    Ok(out)
}

/// Wᵢₐ ← Wᵢₐ · Σⱼ Hₐⱼ Vᵢⱼ/(WH)ᵢⱼ / Σⱼ Hₐⱼ.
pub fn kl_update_w(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<Dense> {
    let ratio = v.ratio(&w.matmul(h)?, EPS)?;
    let num = ratio.mul_dense(&h.transpose())?;
    let row_sums = h.row_sums();
    let mut out = w.clone();
    for i in 0..w.rows() {
        for (a, x) in out.row_mut(i).iter_mut().enumerate() {
            *x *= num.get(i, a) / (row_sums[a] + EPS);
        }
    }
    Ok(out)
}

pub fn mu_kl_step(v: &DataMatrix, w: &Dense, h: &Dense) -> Result<(Dense, Dense)> {
    let h = kl_update_h(v, w, h)?;
    let w = kl_update_w(v, w, &h)?;
    Ok((w, h))
}
