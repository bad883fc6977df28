//! Nonsmooth NMF: V ≈ W·S(θ)·H with S(θ) = (1−θ)I + (θ/k)·11ᵀ.

use crate::error::{Error, Result};
use crate::matcore::{DataMatrix, Dense};

use super::mu::{kl_update_h, kl_update_w};

pub fn nsnmf_smoothing(theta: f64, k: usize) -> Result<Dense> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Param(format!("theta = {theta} outside [0, 1]")));
    }
    if k == 0 {
        return Err(Error::Rank("smoothing matrix needs k >= 1".into()));
    }
    let off = theta / k as f64;
    Ok(Dense::from_fn(k, k, |a, b| if a == b { 1.0 - theta + off } else { off }))
}

/// KL multiplicative step with the smoothed operands: H against basis W·S,
/// then W against mixture S·H′.
pub fn nsnmf_iterate(v: &DataMatrix, w: &Dense, h: &Dense, smoothing: &Dense) -> Result<(Dense, Dense)> {
    let basis = w.matmul(smoothing)?;
    let h_new = kl_update_h(v, &basis, h)?;
    let mixture = smoothing.matmul(&h_new)?;
    let w_new = kl_update_w(v, w, &mixture)?;
    Ok((w_new, h_new))
}
