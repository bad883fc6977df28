//! Binary matrix factorization by penalty continuation.
//!
//! The penalty λ·Σ X²(1−X)² on both factors pulls entries toward {0, 1}; λ
//! grows on a schedule so early iterations fit V and later ones binarize.

use crate::error::{Error, Result};
use crate::matcore::{residual_sq, DataMatrix, Dense, EPS};

/// λ grows by `growth` every `period` iterations, capped at `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub initial: f64,
    pub growth: f64,
    pub period: usize,
    pub max: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule { initial: 1.1, growth: 10.0, period: 100, max: 1e7 }
    }
}

impl LambdaSchedule {
    /// λ in effect at 1-based iteration `iter`.
    pub fn at(&self, iter: usize) -> f64 {
        let epochs = iter.saturating_sub(1) / self.period.max(1);
        let mut lambda = self.initial;
        for _ in 0..epochs {
            lambda *= self.growth;
            if lambda >= self.max {
                return self.max;
            }
        }
        lambda.min(self.max)
    }
}

impl LambdaSchedule {
    /// True once λ will not change after `iter`.
    pub fn is_final(&self, iter: usize) -> bool {
        self.growth == 1.0 || self.at(iter) >= self.max
    }
}

pub fn check_unit_interval(v: &DataMatrix) -> Result<()> {
    if let Some(x) = v.stored_values().iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!(
            "binary factorization needs entries in [0, 1], found {x} (rescale with --scale-unit)"
        )));
    }
    Ok(())
}

/// H ← H ∘ (WᵀV + 3λH²) ⊘ (WᵀWH + 2λH³ + λH), then W symmetrically with H′.
pub fn bmf_iterate(v: &DataMatrix, w: &Dense, h: &Dense, lambda: f64) -> Result<(Dense, Dense)> {
    check_unit_interval(v)?;
    let num = v.wt_mul(w)?;
    let den = w.t_matmul(w)?.matmul(h)?;
    let h_new = penalized_update(h, &num, &den, lambda)?;
    let num = v.mul_dense(&h_new.transpose())?;
    let den = w.matmul(&h_new.matmul_t(&h_new)?)?;
    let w_new = penalized_update(w, &num, &den, lambda)?;
    Ok((w_new, h_new))
}

fn penalized_update(x: &Dense, num: &Dense, den: &Dense, lambda: f64) -> Result<Dense> {
    let num = num.zip_with(x, "bmf", |n, xi| n + 3.0 * lambda * xi * xi)?;
    let den = den.zip_with(x, "bmf", |d, xi| d + 2.0 * lambda * xi * xi * xi + lambda * xi)?;
    x.hadamard(&num.safe_divide(&den, EPS)?)
}

/// ‖V − WH‖²F + λ·Σ H²(1−H)² + λ·Σ W²(1−W)².
pub fn bmf_objective(v: &DataMatrix, w: &Dense, h: &Dense, lambda: f64) -> Result<f64> {
    let pen = |m: &Dense| m.as_slice().iter().map(|&x| x * x * (1.0 - x) * (1.0 - x)).sum::<f64>();
    Ok(residual_sq(v, &w.matmul(h)?)? + lambda * (pen(h) + pen(w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::mu::mu_eu_step;
    use crate::matcore::RngStream;

    #[test]
    fn zero_lambda_is_plain_euclidean() {
        let mut rng = RngStream::new(41);
        let v = DataMatrix::Dense(Dense::from_fn(5, 4, |_, _| rng.uniform()));
        let w = Dense::from_fn(5, 2, |_, _| rng.uniform());
        let h = Dense::from_fn(2, 4, |_, _| rng.uniform());
        assert_eq!(bmf_iterate(&v, &w, &h, 0.0).unwrap(), mu_eu_step(&v, &w, &h).unwrap());
    }

    #[test]
    fn rejects_out_of_range_input() {
        let v = DataMatrix::Dense(Dense::from_rows(&[[0.5, 1.5]]));
        let w = Dense::filled(1, 1, 0.5);
        let h = Dense::filled(1, 2, 0.5);
        assert_eq!(bmf_iterate(&v, &w, &h, 1.0).unwrap_err().kind(), "domain");
    }

    #[test]
    fn zeros_stay_zero() {
        let v = DataMatrix::Dense(Dense::identity(3));
        let mut w = Dense::filled(3, 2, 0.4);
        let mut h = Dense::filled(2, 3, 0.6);
        w.set(0, 1, 0.0);
        h.set(1, 2, 0.0);
        for it in 1..50 {
            (w, h) = bmf_iterate(&v, &w, &h, LambdaSchedule::default().at(it)).unwrap();
            assert_eq!(w.get(0, 1), 0.0);
            assert_eq!(h.get(1, 2), 0.0);
        }
    }

    #[test]
    fn schedule_steps_and_caps() {
        let s = LambdaSchedule::default();
        assert_eq!(s.at(1), 1.1);
        assert_eq!(s.at(100), 1.1);
        assert!((s.at(101) - 11.0).abs() < 1e-12);
        assert!((s.at(201) - 110.0).abs() < 1e-9);
        assert_eq!(s.at(10_000), 1e7);
        let fixed = LambdaSchedule { growth: 1.0, ..s };
        assert_eq!(fixed.at(5000), 1.1);
        assert!(fixed.is_final(1));
        assert!(!s.is_final(700) && s.is_final(701));
    }
}
