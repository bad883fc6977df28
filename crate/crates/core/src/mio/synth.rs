use crate::error::{Error, Result};
use crate::matcore::{Csr, DataMatrix, Dense, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub v: DataMatrix,
    pub w: Dense,
    pub h: Dense,
}

/// Block-structured test data V = max(0, W*H* + noise).
///
/// Rows and columns are split into `k_true` contiguous, near-equal blocks.
/// W* is U[0.5, 1) on its block diagonal and zero elsewhere; each column of
/// H* carries U[0.5, 1) on its own block's row and U[0, 0.05) on the others.
/// With `density < 1`, entries below the (1 − density) quantile of V are
/// zeroed and V comes back as CSR. The factors are drawn before the noise,
/// so changing only `noise_sigma` keeps W* and H*.
pub fn synth(m: usize, n: usize, k_true: usize, noise_sigma: f64, density: f64, seed: u64) -> Result<SynthData> {
    if m == 0 || n == 0 {
        return Err(Error::Param("synthetic matrix needs rows and cols >= 1".into()));
    }
    if k_true == 0 || k_true > m.min(n) {
        return Err(Error::Param(format!("k_true = {k_true} outside 1..={}", m.min(n))));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Param("noise_sigma must be finite and >= 0".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Param("density must lie in (0, 1]".into()));
    }

    let mut rng = RngStream::new(seed);
    let row_block = |i: usize| i * k_true / m;
    let col_block = |j: usize| j * k_true / n;
    let w = Dense::from_fn(m, k_true, |i, q| if row_block(i) == q { 0.5 + 0.5 * rng.uniform() } else { 0.0 });
    let mut h = Dense::zeros(k_true, n);
    for j in 0..n {
        for q in 0..k_true {
            let x = if col_block(j) == q { 0.5 + 0.5 * rng.uniform() } else { 0.05 * rng.uniform() };
            h.set(q, j, x);
        }
    }

    let mut v = w.matmul(&h)?;
    if noise_sigma > 0.0 {
        for x in v.as_mut_slice() {
            *x = (*x + noise_sigma * rng.standard_normal()).max(0.0);
        }
    }
    if density < 1.0 {
        let mut sorted = v.as_slice().to_vec();
        sorted.sort_by(f64::total_cmp);
        let cut = ((1.0 - density) * sorted.len() as f64).floor() as usize;
        if cut > 0 {
            let threshold = sorted[cut.min(sorted.len() - 1)];
            v.map_inplace(|x| if x < threshold { 0.0 } else { x });
        }
        return Ok(SynthData { v: DataMatrix::Sparse(Csr::from_dense(&v)), w, h });
    }
    Ok(SynthData { v: DataMatrix::Dense(v), w, h })
}
