//! Initial factor pairs (W, H) for the iterative methods.

mod svd;

pub use svd::{svd, Svd};

use std::fmt;

use crate::error::{Error, Result};
use crate::matcore::{DataMatrix, Dense, RngStream};

/// Zero-filling policy applied after the NNDSVD construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NndsvdVariant {
    /// Keep exact zeros.
    Plain,
    /// Replace zeros with mean(V).
    Mean,
    /// Replace zeros with uniform draws on [0, mean(V)/100).
    MeanRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    /// Uniform entries on [0, scale).
    Random { scale: f64 },
    Fixed { w: Dense, h: Dense },
    /// `p_cols = None` picks half the dense pool, rounded up.
    RandomC { p_cols: Option<usize>, dense_fraction: f64 },
    /// `None` picks ⌈n/5⌉ columns and ⌈m/5⌉ rows.
    RandomVcol { p_cols: Option<usize>, p_rows: Option<usize> },
    Nndsvd(NndsvdVariant),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::RandomVcol { p_cols: None, p_rows: None }
    }
}

impl SeedSpec {
    /// Stable CLI identifiers. `fixed` has no factors attached yet and is
    /// rejected here; build [`SeedSpec::Fixed`] directly.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "random" => SeedSpec::Random { scale: 1.0 },
            "random_c" => SeedSpec::RandomC { p_cols: None, dense_fraction: 0.2 },
            "random_vcol" => SeedSpec::default(),
            "nndsvd" => SeedSpec::Nndsvd(NndsvdVariant::Plain),
            "nndsvda" => SeedSpec::Nndsvd(NndsvdVariant::Mean),
            "nndsvdar" => SeedSpec::Nndsvd(NndsvdVariant::MeanRandom),
            "fixed" => {
                return Err(Error::Param("seed 'fixed' needs explicit W and H factors".into()))
            }
            other => return Err(Error::Param(format!("unknown seeding method '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SeedSpec::Random { .. } => "random",
            SeedSpec::Fixed { .. } => "fixed",
            SeedSpec::RandomC { .. } => "random_c",
            SeedSpec::RandomVcol { .. } => "random_vcol",
            SeedSpec::Nndsvd(NndsvdVariant::Plain) => "nndsvd",
            SeedSpec::Nndsvd(NndsvdVariant::Mean) => "nndsvda",
            SeedSpec::Nndsvd(NndsvdVariant::MeanRandom) => "nndsvdar",
        }
    }

    /// Produces (W, H) of shapes m×k and k×n for `v`.
    pub fn seed(&self, v: &DataMatrix, k: usize, rng: &mut RngStream) -> Result<(Dense, Dense)> {
        let (m, n) = v.shape();
        match self {
            SeedSpec::Random { scale } => seed_random(m, n, k, *scale, rng),
            SeedSpec::Fixed { w, h } => seed_fixed(w, h, m, n, k),
            SeedSpec::RandomC { p_cols, dense_fraction } => {
                seed_random_c(v, k, *p_cols, *dense_fraction, rng)
            }
            SeedSpec::RandomVcol { p_cols, p_rows } => {
                seed_random_vcol(v, k, p_cols.unwrap_or(n.div_ceil(5)), p_rows.unwrap_or(m.div_ceil(5)), rng)
            }
            SeedSpec::Nndsvd(variant) => seed_nndsvd(v, k, *variant, rng),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn check_rank(m: usize, n: usize, k: usize) -> Result<()> {
    if k == 0 || k > m.min(n) {
        return Err(Error::Rank(format!("rank {k} outside [1, {}] for a {m}x{n} matrix", m.min(n))));
    }
    Ok(())
}

/// Entries i.i.d. uniform on [0, scale); W is drawn before H, row-major.
pub fn seed_random(m: usize, n: usize, k: usize, scale: f64, rng: &mut RngStream) -> Result<(Dense, Dense)> {
    check_rank(m, n, k)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Param(format!("random seed scale must be positive, got {scale}")));
    }
    let w = Dense::from_fn(m, k, |_, _| scale * rng.uniform());
    let h = Dense::from_fn(k, n, |_, _| scale * rng.uniform());
    Ok((w, h))
}

/// Each W column averages `p_cols` sampled columns of V; each H row averages
/// `p_rows` sampled rows.
pub fn seed_random_vcol(
    v: &DataMatrix,
    k: usize,
    p_cols: usize,
    p_rows: usize,
    rng: &mut RngStream,
) -> Result<(Dense, Dense)> {
    let (m, n) = v.shape();
    check_rank(m, n, k)?;
    if p_cols == 0 || p_cols > n {
        return Err(Error::Param(format!("p_cols = {p_cols} outside [1, {n}]")));
    }
    if p_rows == 0 || p_rows > m {
        return Err(Error::Param(format!("p_rows = {p_rows} outside [1, {m}]")));
    }
    let vd = v.to_dense();
    let all_cols: Vec<usize> = (0..n).collect();
    let w = column_means(&vd, k, &all_cols, p_cols, rng);
    let mut h = Dense::zeros(k, n);
    for a in 0..k {
        let picked = rng.sample_indices(m, p_rows);
        let row = h.row_mut(a);
        for &i in &picked {
            for (acc, &x) in row.iter_mut().zip(vd.row(i)) {
                *acc += x;
            }
        }
        let inv = 1.0 / p_rows as f64;
        row.iter_mut().for_each(|x| *x *= inv);
    }
    Ok((w, h))
}

/// W columns average `p_cols` columns drawn from the pool of the
/// ⌈dense_fraction·n⌉ longest columns of V; H is uniform on [0, 1).
pub fn seed_random_c(
    v: &DataMatrix,
    k: usize,
    p_cols: Option<usize>,
    dense_fraction: f64,
    rng: &mut RngStream,
) -> Result<(Dense, Dense)> {
    let (m, n) = v.shape();
    check_rank(m, n, k)?;
    if !(dense_fraction > 0.0 && dense_fraction <= 1.0) {
        return Err(Error::Param(format!("dense_fraction = {dense_fraction} outside (0, 1]")));
    }
    let vd = v.to_dense();
    let pool_size = ((dense_fraction * n as f64).ceil() as usize).clamp(1, n);
    let p_cols = p_cols.unwrap_or(pool_size.div_ceil(2));
    if p_cols == 0 || p_cols > pool_size {
        return Err(Error::Param(format!(
            "p_cols = {p_cols} outside [1, {pool_size}] (dense pool size)"
        )));
    }
    let norms: Vec<f64> = vd.col_sums_sq().into_iter().map(f64::sqrt).collect();
    let mut by_norm: Vec<usize> = (0..n).collect();
    // Stable: equal norms keep ascending column order.
    by_norm.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut pool: Vec<usize> = by_norm[..pool_size].to_vec();
    pool.sort_unstable();
    let w = column_means(&vd, k, &pool, p_cols, rng);
    let h = Dense::from_fn(k, n, |_, _| rng.uniform());
    Ok((w, h))
}

fn column_means(vd: &Dense, k: usize, pool: &[usize], p: usize, rng: &mut RngStream) -> Dense {
    let m = vd.rows();
    let mut w = Dense::zeros(m, k);
    let inv = 1.0 / p as f64;
    for a in 0..k {
        let picked = rng.sample_indices(pool.len(), p);
        for i in 0..m {
            let row = vd.row(i);
            let s: f64 = picked.iter().map(|&t| row[pool[t]]).sum();
            w.set(i, a, s * inv);
        }
    }
    w
}

/// Nonnegative double SVD.
pub fn seed_nndsvd(
    v: &DataMatrix,
    k: usize,
    variant: NndsvdVariant,
    rng: &mut RngStream,
) -> Result<(Dense, Dense)> {
    let (m, n) = v.shape();
    check_rank(m, n, k)?;
    let vd = v.to_dense();
    if !vd.is_nonnegative() {
        return Err(Error::Domain("NNDSVD needs a nonnegative matrix".into()));
    }
    let dec = svd(&vd)?;
    let mut w = Dense::zeros(m, k);
    let mut h = Dense::zeros(k, n);
    for j in 0..k {
        let sigma = dec.sigma[j];
        let u = dec.u.column(j);
        let vt = dec.vt.row(j);
        let (up, un) = split_parts(&u);
        let (vp, vn) = split_parts(vt);
        let (nup, nun, nvp, nvn) = (norm(&up), norm(&un), norm(&vp), norm(&vn));
        let (mu_pos, mu_neg) = (nup * nvp, nun * nvn);
        let (uu, vv, nu, nv, mu) = if mu_pos >= mu_neg {
            (up, vp, nup, nvp, mu_pos)
        } else {
            (un, vn, nun, nvn, mu_neg)
        };
        if mu <= 0.0 || sigma <= 0.0 {
            continue;
        }
        let scale = (sigma * mu).sqrt();
        for i in 0..m {
            w.set(i, j, scale * uu[i] / nu);
        }
        for (c, &x) in vv.iter().enumerate() {
            h.set(j, c, scale * x / nv);
        }
    }
    match variant {
        NndsvdVariant::Plain => {}
        NndsvdVariant::Mean => {
            let avg = v.mean();
            fill_zeros(&mut w, || avg);
            fill_zeros(&mut h, || avg);
        }
        NndsvdVariant::MeanRandom => {
            let hi = v.mean() / 100.0;
            fill_zeros(&mut w, || hi * rng.uniform());
            fill_zeros(&mut h, || hi * rng.uniform());
        }
    }
    Ok((w, h))
}

fn split_parts(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (x.iter().map(|&a| a.max(0.0)).collect(), x.iter().map(|&a| (-a).max(0.0)).collect())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn fill_zeros(m: &mut Dense, mut f: impl FnMut() -> f64) {
    for x in m.as_mut_slice() {
        if *x == 0.0 {
            *x = f();
        }
    }
}

/// Validated copies of user-provided factors.
pub fn seed_fixed(w0: &Dense, h0: &Dense, m: usize, n: usize, k: usize) -> Result<(Dense, Dense)> {
    if w0.shape() != (m, k) || h0.shape() != (k, n) {
        return Err(Error::Seed(format!(
            "fixed factors are {}x{} and {}x{}, expected {m}x{k} and {k}x{n}",
            w0.rows(),
            w0.cols(),
            h0.rows(),
            h0.cols()
        )));
    }
    for (name, f) in [("W", w0), ("H", h0)] {
        if !f.is_finite() || !f.is_nonnegative() {
            return Err(Error::Seed(format!("fixed {name} has negative or non-finite entries")));
        }
    }
    Ok((w0.clone(), h0.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::residual_sq;

    fn dm(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::Dense(Dense::from_rows(rows))
    }

    fn random_v(m: usize, n: usize, seed: u64) -> DataMatrix {
        let mut r = RngStream::new(seed);
        DataMatrix::Dense(Dense::from_fn(m, n, |_, _| r.uniform()))
    }

    #[test]
    fn random_shapes_range_and_determinism() {
        let (w, h) = seed_random(2, 2, 1, 1.0, &mut RngStream::new(7)).unwrap();
        assert_eq!(w.shape(), (2, 1));
        assert_eq!(h.shape(), (1, 2));
        assert!(w.as_slice().iter().chain(h.as_slice()).all(|&x| (0.0..1.0).contains(&x)));
        let again = seed_random(2, 2, 1, 1.0, &mut RngStream::new(7)).unwrap();
        assert_eq!((w.clone(), h.clone()), again);
        let other = seed_random(2, 2, 1, 1.0, &mut RngStream::new(8)).unwrap();
        assert_ne!((w, h), other);
    }

    #[test]
    fn rank_out_of_range() {
        assert_eq!(seed_random(3, 2, 3, 1.0, &mut RngStream::new(0)).unwrap_err().kind(), "rank");
        assert_eq!(seed_random(3, 2, 0, 1.0, &mut RngStream::new(0)).unwrap_err().kind(), "rank");
    }

    #[test]
    fn vcol_full_sampling_is_the_full_mean() {
        let v = dm(&[&[1.0, 3.0], &[2.0, 4.0]]);
        let (w, h) = seed_random_vcol(&v, 1, 2, 2, &mut RngStream::new(11)).unwrap();
        assert_eq!(w, Dense::from_rows(&[[2.0], [3.0]]));
        assert_eq!(h, Dense::from_rows(&[[1.5, 3.5]]));
    }

    #[test]
    fn vcol_equal_columns() {
        let v = dm(&[&[1.0, 1.0, 1.0], &[5.0, 5.0, 5.0], &[0.5, 0.5, 0.5]]);
        let (w, _) = seed_random_vcol(&v, 2, 2, 1, &mut RngStream::new(3)).unwrap();
        for a in 0..2 {
            assert_eq!(w.column(a), vec![1.0, 5.0, 0.5]);
        }
    }

    #[test]
    fn vcol_parameter_errors() {
        let v = random_v(4, 3, 1);
        assert_eq!(seed_random_vcol(&v, 1, 0, 1, &mut RngStream::new(0)).unwrap_err().kind(), "param");
        assert_eq!(seed_random_vcol(&v, 1, 4, 1, &mut RngStream::new(0)).unwrap_err().kind(), "param");
        assert_eq!(seed_random_vcol(&v, 1, 1, 5, &mut RngStream::new(0)).unwrap_err().kind(), "param");
    }

    #[test]
    fn random_c_single_member_pool() {
        let v = dm(&[
            &[10.0, 0.1, 0.0, 0.2, 0.1],
            &[20.0, 0.0, 0.1, 0.1, 0.2],
        ]);
        let (w, h) = seed_random_c(&v, 2, Some(1), 0.2, &mut RngStream::new(5)).unwrap();
        for a in 0..2 {
            assert_eq!(w.column(a), vec![10.0, 20.0]);
        }
        assert_eq!(h.shape(), (2, 5));
    }

    #[test]
    fn random_c_full_pool_matches_vcol_columns() {
        let v = random_v(6, 8, 9);
        let (wc, _) = seed_random_c(&v, 3, Some(2), 1.0, &mut RngStream::new(21)).unwrap();
        let (wv, _) = seed_random_vcol(&v, 3, 2, 1, &mut RngStream::new(21)).unwrap();
        assert_eq!(wc, wv);
    }

    #[test]
    fn random_c_norm_tie_prefers_lower_index() {
        // Columns 1 and 2 tie for the largest norm; the pool of one keeps column 1.
        let v = dm(&[&[0.1, 3.0, 0.0, 0.2], &[0.0, 0.0, 3.0, 0.1]]);
        let (w, _) = seed_random_c(&v, 1, Some(1), 0.25, &mut RngStream::new(0)).unwrap();
        assert_eq!(w.column(0), vec![3.0, 0.0]);
    }

    #[test]
    fn random_c_pool_too_small() {
        let v = random_v(3, 5, 2);
        let err = seed_random_c(&v, 1, Some(2), 0.2, &mut RngStream::new(0)).unwrap_err();
        assert_eq!(err.kind(), "param");
    }

    #[test]
    fn nndsvd_rank_one_exact() {
        let v = dm(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let (w, h) = seed_nndsvd(&v, 1, NndsvdVariant::Plain, &mut RngStream::new(0)).unwrap();
        assert!(w.max_abs_diff(&Dense::from_rows(&[[1.0], [2.0]])).unwrap() < 1e-12);
        assert!(h.max_abs_diff(&Dense::from_rows(&[[1.0, 2.0]])).unwrap() < 1e-12);
        let recon = w.matmul(&h).unwrap();
        assert!(recon.max_abs_diff(&v.to_dense()).unwrap() < 1e-12);
    }

    #[test]
    fn nndsvd_plain_is_deterministic() {
        let v = random_v(7, 5, 4);
        let a = seed_nndsvd(&v, 3, NndsvdVariant::Plain, &mut RngStream::new(1)).unwrap();
        let b = seed_nndsvd(&v, 3, NndsvdVariant::Plain, &mut RngStream::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nndsvd_variants_fill_zeros() {
        let v = random_v(8, 6, 12);
        let (w0, h0) = seed_nndsvd(&v, 4, NndsvdVariant::Plain, &mut RngStream::new(0)).unwrap();
        assert!(w0.as_slice().iter().chain(h0.as_slice()).any(|&x| x == 0.0));
        let avg = v.mean();
        let (wa, ha) = seed_nndsvd(&v, 4, NndsvdVariant::Mean, &mut RngStream::new(0)).unwrap();
        for (z, x) in w0.as_slice().iter().chain(h0.as_slice()).zip(wa.as_slice().iter().chain(ha.as_slice())) {
            if *z == 0.0 {
                assert_eq!(*x, avg);
            } else {
                assert_eq!(x, z);
            }
        }
        let (wr, hr) = seed_nndsvd(&v, 4, NndsvdVariant::MeanRandom, &mut RngStream::new(0)).unwrap();
        for (z, x) in w0.as_slice().iter().chain(h0.as_slice()).zip(wr.as_slice().iter().chain(hr.as_slice())) {
            if *z == 0.0 {
                assert!((0.0..avg / 100.0).contains(x));
            }
        }
    }

    #[test]
    fn nndsvd_objective_below_zero_factorization() {
        for seed in 0..20 {
            let v = random_v(20, 15, 100 + seed);
            for k in 1..=5 {
                let (w, h) = seed_nndsvd(&v, k, NndsvdVariant::Plain, &mut RngStream::new(0)).unwrap();
                let obj = residual_sq(&v, &w.matmul(&h).unwrap()).unwrap();
                assert!(obj <= v.frobenius_sq(), "seed {seed} k {k}: {obj}");
            }
        }
    }

    #[test]
    fn fixed_contract() {
        let w = Dense::from_rows(&[[1.0], [2.0]]);
        let h = Dense::from_rows(&[[0.5, 0.0, 1.0]]);
        assert_eq!(seed_fixed(&w, &h, 2, 3, 1).unwrap(), (w.clone(), h.clone()));
        let neg = Dense::from_rows(&[[1.0], [-2.0]]);
        assert_eq!(seed_fixed(&neg, &h, 2, 3, 1).unwrap_err().kind(), "seed");
        let wrong_rank = Dense::from_rows(&[[1.0, 1.0], [2.0, 1.0]]);
        assert_eq!(seed_fixed(&wrong_rank, &h, 2, 3, 1).unwrap_err().kind(), "seed");
    }

    #[test]
    fn names_roundtrip() {
        for name in ["random", "random_c", "random_vcol", "nndsvd", "nndsvda", "nndsvdar"] {
            assert_eq!(SeedSpec::from_name(name).unwrap().name(), name);
        }
        assert_eq!(SeedSpec::from_name("fixed").unwrap_err().kind(), "param");
        assert_eq!(SeedSpec::from_name("kmeans").unwrap_err().kind(), "param");
    }
}
