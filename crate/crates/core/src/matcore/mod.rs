//! Dense and CSR matrix kernels shared by every algorithm, plus the seeded
//! random stream.
//!
//! Products against a sparse operand visit stored entries in the same order
//! as the dense kernels visit nonzero entries, so a CSR matrix and its
//! densified copy give bitwise-identical products.

mod csr;
mod dense;
mod rng;

pub use csr::Csr;
pub use dense::Dense;
pub use rng::{mix64, RngStream};

use crate::error::{Error, Result};

/// Denominator stabilizer for multiplicative updates (2⁻⁵²).
pub const EPS: f64 = f64::EPSILON;

/// An input matrix `V`, dense or CSR.
#[derive(Debug, Clone, PartialEq)]
pub enum DataMatrix {
    Dense(Dense),
    Sparse(Csr),
}

impl From<Dense> for DataMatrix {
    fn from(m: Dense) -> Self {
        DataMatrix::Dense(m)
    }
}

impl From<Csr> for DataMatrix {
    fn from(m: Csr) -> Self {
        DataMatrix::Sparse(m)
    }
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        self.shape().0
    }

    pub fn cols(&self) -> usize {
        self.shape().1
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            DataMatrix::Dense(m) => m.shape(),
            DataMatrix::Sparse(m) => m.shape(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, DataMatrix::Sparse(_))
    }

    pub fn to_dense(&self) -> Dense {
        match self {
            DataMatrix::Dense(m) => m.clone(),
            DataMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> Csr {
        match self {
            DataMatrix::Dense(m) => Csr::from_dense(m),
            DataMatrix::Sparse(m) => m.clone(),
        }
    }

    /// Stored values: every entry for dense storage, the stored entries for CSR.
    pub fn stored_values(&self) -> &[f64] {
        match self {
            DataMatrix::Dense(m) => m.as_slice(),
            DataMatrix::Sparse(m) => m.values(),
        }
    }

    /// Writes row `i` densely into `buf` (length = cols).
    pub fn row_into(&self, i: usize, buf: &mut [f64]) {
        match self {
            DataMatrix::Dense(m) => buf.copy_from_slice(m.row(i)),
            DataMatrix::Sparse(m) => {
                buf.fill(0.0);
                for (j, v) in m.row_entries(i) {
                    buf[j] = v;
                }
            }
        }
    }

    /// `V · rhs`.
    pub fn mul_dense(&self, rhs: &Dense) -> Result<Dense> {
        match self {
            DataMatrix::Dense(m) => m.matmul(rhs),
            DataMatrix::Sparse(m) => m.mul_dense(rhs),
        }
    }

    /// `Vᵀ · rhs`.
    pub fn t_mul_dense(&self, rhs: &Dense) -> Result<Dense> {
        match self {
            DataMatrix::Dense(m) => m.t_matmul(rhs),
            DataMatrix::Sparse(m) => m.t_mul_dense(rhs),
        }
    }

    /// `Wᵀ · V`, computed as `(Vᵀ · W)ᵀ`.
    pub fn wt_mul(&self, w: &Dense) -> Result<Dense> {
        Ok(self.t_mul_dense(w)?.transpose())
    }

    /// `lhs · V`, computed as `(Vᵀ · lhsᵀ)ᵀ`.
    pub fn left_mul_dense(&self, lhs: &Dense) -> Result<Dense> {
        if lhs.cols() != self.rows() {
            return Err(Error::shape("matmul", lhs.shape(), self.shape()));
        }
        Ok(self.t_mul_dense(&lhs.transpose())?.transpose())
    }

    /// Elementwise `V / (denom + eps)`, keeping V's storage. Positions where
    /// V is zero stay zero.
    pub fn ratio(&self, denom: &Dense, eps: f64) -> Result<DataMatrix> {
        if self.shape() != denom.shape() {
            return Err(Error::shape("safe_divide", self.shape(), denom.shape()));
        }
        Ok(match self {
            DataMatrix::Dense(m) => DataMatrix::Dense(m.zip_with(denom, "safe_divide", |v, d| {
                if v == 0.0 {
                    0.0
                } else {
                    v / (d + eps)
                }
            })?),
            DataMatrix::Sparse(m) => {
                DataMatrix::Sparse(m.map_entries(|i, j, v| {
                    if v == 0.0 {
                        0.0
                    } else {
                        v / (denom.get(i, j) + eps)
                    }
                }))
            }
        })
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.stored_values().iter().map(|x| x * x).sum()
    }

    pub fn sum(&self) -> f64 {
        self.stored_values().iter().sum()
    }

    /// Mean over all m·n entries, implicit zeros included.
    pub fn mean(&self) -> f64 {
        let (m, n) = self.shape();
        self.sum() / (m * n) as f64
    }

    pub fn max(&self) -> f64 {
        let stored = self.stored_values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self {
            DataMatrix::Sparse(m) if m.nnz() < m.rows() * m.cols() => stored.max(0.0),
            _ => stored,
        }
    }

    pub fn scaled(&self, s: f64) -> DataMatrix {
        match self {
            DataMatrix::Dense(m) => DataMatrix::Dense(m.scale(s)),
            DataMatrix::Sparse(m) => DataMatrix::Sparse(m.map_entries(|_, _, v| v * s)),
        }
    }

    /// Checks the factorization-input contract: every value finite and ≥ 0.
    pub fn validate_input(&self) -> Result<()> {
        let (m, n) = self.shape();
        if m == 0 || n == 0 {
            return Err(Error::Shape(format!("empty {m}x{n} input matrix")));
        }
        if let Some(v) = self.stored_values().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("input matrix contains {v}; entries must be finite and >= 0")));
        }
        Ok(())
    }
}

/// General product where either operand may be sparse. The result is dense.
pub fn matmul(a: &DataMatrix, b: &DataMatrix) -> Result<Dense> {
    match (a, b) {
        (_, DataMatrix::Dense(bd)) => a.mul_dense(bd),
        (DataMatrix::Dense(ad), DataMatrix::Sparse(bs)) => {
            if ad.cols() != bs.rows() {
                return Err(Error::shape("matmul", ad.shape(), bs.shape()));
            }
            let mut out = Dense::zeros(ad.rows(), bs.cols());
            for i in 0..ad.rows() {
                for (p, &x) in ad.row(i).iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (j, y) in bs.row_entries(p) {
                        let cur = out.get(i, j);
                        out.set(i, j, cur + x * y);
                    }
                }
            }
            Ok(out)
        }
        (DataMatrix::Sparse(a_s), DataMatrix::Sparse(bs)) => a_s.mul_dense(&bs.to_dense()),
    }
}

/// Σ (Vᵢⱼ − Mᵢⱼ)², visiting entries in row-major order for either storage.
pub fn residual_sq(v: &DataMatrix, m: &Dense) -> Result<f64> {
    if v.shape() != m.shape() {
        return Err(Error::shape("residual", v.shape(), m.shape()));
    }
    let mut buf = vec![0.0; v.cols()];
    let mut total = 0.0;
    for i in 0..v.rows() {
        v.row_into(i, &mut buf);
        total += buf.iter().zip(m.row(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total)
}

/// Σ Aᵢⱼ².
pub fn frobenius_sq(a: &Dense) -> f64 {
    a.frobenius_sq()
}

/// Generalized Kullback-Leibler divergence Σ [V ln(V/M) − V + M] with 0·ln 0 = 0.
///
/// Each term is evaluated as `V·(d − ln(1 + d))`, `d = (M − V)/V`, which keeps
/// near-exact fits from drowning in cancellation error.
pub fn kl_div(v: &DataMatrix, m: &Dense) -> Result<f64> {
    kl_div_floored(v, m, 0.0)
}

/// [`kl_div`] with every reconstruction entry raised to at least `floor`, so
/// zeros opposite positive data cost a large finite amount instead of failing.
pub fn kl_div_floored(v: &DataMatrix, m: &Dense, floor: f64) -> Result<f64> {
    if v.shape() != m.shape() {
        return Err(Error::shape("kl_div", v.shape(), m.shape()));
    }
    let mut buf = vec![0.0; v.cols()];
    let mut total = 0.0;
    for i in 0..v.rows() {
        v.row_into(i, &mut buf);
        for (j, (&x, &y)) in buf.iter().zip(m.row(i)).enumerate() {
            total += kl_term(x, y.max(floor)).ok_or_else(|| {
                Error::Domain(format!("reconstruction is {y} at ({i}, {j}) where V = {x} > 0"))
            })?;
        }
    }
    Ok(total)
}

#[inline]
pub(crate) fn kl_term(v: f64, m: f64) -> Option<f64> {
    if v == 0.0 {
        return Some(m);
    }
    if m <= 0.0 {
        return None;
    }
    let d = (m - v) / v;
    let log_ratio = if d < -0.5 { (m / v).ln() } else { d.ln_1p() };
    Some((v * (d - log_ratio)).max(0.0))
}
