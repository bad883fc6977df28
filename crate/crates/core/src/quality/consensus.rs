use crate::error::{Error, Result};
use crate::matcore::Dense;

/// Row index of each column's largest entry; ties go to the lowest row.
pub fn dominant_rows(h: &Dense) -> Vec<usize> {
    (0..h.cols())
        .map(|j| {
            let mut best = 0;
            for i in 1..h.rows() {
                if h.get(i, j) > h.get(best, j) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// n×n indicator of columns of H sharing a dominant row.
pub fn connectivity(h: &Dense) -> Dense {
    let labels = dominant_rows(h);
    let n = labels.len();
    Dense::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 })
}

/// Running sum of connectivity matrices over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusAccumulator {
    sum: Dense,
    runs: usize,
}

impl ConsensusAccumulator {
    pub fn new(n: usize) -> Self {
        ConsensusAccumulator { sum: Dense::zeros(n, n), runs: 0 }
    }

    pub fn n(&self) -> usize {
        self.sum.rows()
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn sum_connectivity(&self) -> &Dense {
        &self.sum
    }

    pub fn add_mixture(&mut self, h: &Dense) -> Result<()> {
        self.add_connectivity(&connectivity(h))
    }

    pub fn add_connectivity(&mut self, c: &Dense) -> Result<()> {
        self.sum = self.sum.add(c)?;
        self.runs += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConsensusAccumulator) -> Result<()> {
        self.sum = self.sum.add(&other.sum)?;
        self.runs += other.runs;
        Ok(())
    }
}

/// Mean connectivity over the accumulated runs.
pub fn consensus(acc: &ConsensusAccumulator) -> Result<Dense> {
    if acc.runs == 0 {
        return Err(Error::Degenerate("consensus needs at least one run".into()));
    }
    Ok(acc.sum.scale(1.0 / acc.runs as f64))
}

/// (1/n²)·Σ 4(Cᵢⱼ − ½)².
pub fn dispersion(c: &Dense) -> f64 {
    let n = c.rows() as f64;
    c.as_slice().iter().map(|&x| 4.0 * (x - 0.5) * (x - 0.5)).sum::<f64>() / (n * n)
}

/// Pearson correlation between the distances 1 − C and the cophenetic
/// distances of their average-linkage dendrogram. Merge ties go to the
/// lowest cluster indices. A constant distance vector yields 1.
pub fn cophenetic(c: &Dense) -> Result<f64> {
    let n = c.rows();
    if n < 3 || c.cols() != n {
        return Err(Error::Degenerate(format!("cophenetic correlation needs a square matrix with n >= 3, got {:?}", c.shape())));
    }
    let d = Dense::from_fn(n, n, |i, j| 1.0 - c.get(i, j));
    let coph = average_linkage_cophenetic(&d);
    let mut x = Vec::with_capacity(n * (n - 1) / 2);
    let mut y = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            x.push(d.get(i, j));
            y.push(coph.get(i, j));
        }
    }
    Ok(pearson(&x, &y))
}

fn average_linkage_cophenetic(d: &Dense) -> Dense {
    let n = d.rows();
    let mut dist = d.clone();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut coph = Dense::zeros(n, n);
    while active.len() > 1 {
        let (mut bi, mut bj, mut best) = (0, 1, f64::INFINITY);
        for (p, &a) in active.iter().enumerate() {
            for (q, &b) in active.iter().enumerate().skip(p + 1) {
                let dab = dist.get(a, b);
                if dab < best {
                    (bi, bj, best) = (p, q, dab);
                }
            }
        }
        let (a, b) = (active[bi], active[bj]);
        for &x in &members[a] {
            for &y in &members[b] {
                coph.set(x, y, best);
                coph.set(y, x, best);
            }
        }
        let (sa, sb) = (members[a].len() as f64, members[b].len() as f64);
        for &o in &active {
            if o != a && o != b {
                let merged = (sa * dist.get(a, o) + sb * dist.get(b, o)) / (sa + sb);
                dist.set(a, o, merged);
                dist.set(o, a, merged);
            }
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        active.remove(bj);
    }
    coph
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return 1.0;
    }
    if syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}
