//! Thin SVD by one-sided Jacobi rotations.
//!
//! Adequate for the desk-scale matrices NNDSVD seeds; accuracy is close to
//! full relative precision for every singular value.

use crate::error::{Error, Result};
use crate::matcore::Dense;

const MAX_SWEEPS: usize = 80;

/// Singular triplets in descending order of σ. `u` is m×r, `vt` is r×n with
/// r = min(m, n).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Dense,
    pub sigma: Vec<f64>,
    pub vt: Dense,
}

pub fn svd(a: &Dense) -> Result<Svd> {
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose())?;
        Ok(Svd { u: t.vt.transpose(), sigma: t.sigma, vt: t.u.transpose() })
    }
}

/// m ≥ n. Orthogonalizes the columns of a working copy of `a`; the rotations
/// accumulate into V.
fn jacobi_tall(a: &Dense) -> Result<Svd> {
    let (m, n) = a.shape();
    // Column-major working storage keeps the rotation loops contiguous.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (m as f64).sqrt();
    // Columns below this squared norm are rounding noise left by rank deficiency.
    let negligible = f64::EPSILON * f64::EPSILON * cols.iter().flatten().map(|x| x * x).sum::<f64>();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || alpha.min(beta) <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps equal singular values in column order.
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let mut u = Dense::zeros(m, n);
    let mut vt = Dense::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (r, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..m {
                u.set(i, r, cols[j][i] / s);
            }
        }
        for i in 0..n {
            vt.set(r, i, v[j][i]);
        }
    }
    Ok(Svd { u, sigma, vt })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::RngStream;

    fn reconstruct(s: &Svd) -> Dense {
        let mut us = s.u.clone();
        for i in 0..us.rows() {
            for (r, &sig) in s.sigma.iter().enumerate() {
                let x = us.get(i, r) * sig;
                us.set(i, r, x);
            }
        }
        us.matmul(&s.vt).unwrap()
    }

    #[test]
    fn rank_one_by_hand() {
        let a = Dense::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let s = svd(&a).unwrap();
        assert!((s.sigma[0] - 5.0).abs() < 1e-12);
        assert!(s.sigma[1].abs() < 1e-12);
        assert!(reconstruct(&s).max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn rank_deficient_with_zero_rows() {
        let a = Dense::from_rows(&[[0.0, 0.0], [1.155051793896703, 5.905740418230747], [0.0, 0.0]]);
        let s = svd(&a).unwrap();
        assert!(reconstruct(&s).max_abs_diff(&a).unwrap() < 1e-12);
        assert!(s.sigma[1] < 1e-14);
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        let mut rng = RngStream::new(3);
        for (m, n) in [(7, 4), (4, 7), (5, 5)] {
            let a = Dense::from_fn(m, n, |_, _| rng.uniform());
            let s = svd(&a).unwrap();
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
            assert!(reconstruct(&s).max_abs_diff(&a).unwrap() < 1e-12);
            // Orthonormal columns of U.
            let utu = s.u.t_matmul(&s.u).unwrap();
            assert!(utu.max_abs_diff(&Dense::identity(m.min(n))).unwrap() < 1e-12);
        }
    }
}
