use crate::error::{Error, Result};

use super::dense::{axpy, Dense};

/// Compressed sparse row matrix.
///
/// Explicitly stored zeros are kept; only structure is validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 {
            return Err(Error::Shape(format!(
                "row pointer length {} for {rows} rows",
                indptr.len()
            )));
        }
        if indptr[0] != 0 || indptr[rows] != indices.len() || indices.len() != values.len() {
            return Err(Error::Shape("row pointers inconsistent with stored entries".into()));
        }
        for i in 0..rows {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if lo > hi {
                return Err(Error::Shape(format!("row pointers decrease at row {i}")));
            }
            let row = &indices[lo..hi];
            if row.iter().any(|&j| j >= cols) {
                return Err(Error::Shape(format!("column index out of bounds in row {i}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Csr { rows, cols, indptr, indices, values })
    }

    /// Builds a CSR matrix from (row, col, value) triplets in any order.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|(i, j, _)| *i >= rows || *j >= cols) {
            return Err(Error::Shape(format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indptr[i + 1] += 1;
            indices.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Csr::new(rows, cols, indptr, indices, values)
    }

    /// Keeps the nonzero entries of `m`.
    pub fn from_dense(m: &Dense) -> Self {
        let mut indptr = Vec::with_capacity(m.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr { rows: m.rows(), cols: m.cols(), indptr, indices, values }
    }

    pub fn to_dense(&self) -> Dense {
        let mut d = Dense::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let row = d.row_mut(i);
            for (j, v) in self.row_entries(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Same sparsity pattern, values mapped by `f(row, col, value)`.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Csr {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                values.push(f(i, j, v));
            }
        }
        Csr { values, ..self.clone() }
    }

    /// `self · rhs` with a dense right operand.
    pub fn mul_dense(&self, rhs: &Dense) -> Result<Dense> {
        if self.cols != rhs.rows() {
            return Err(Error::shape("matmul", self.shape(), rhs.shape()));
        }
        let n = rhs.cols();
        let mut out = Dense::zeros(self.rows, n);
        for i in 0..self.rows {
            let o_row = out.row_mut(i);
            for (p, a) in self.row_entries(i) {
                if a == 0.0 {
                    continue;
                }
                axpy(a, rhs.row(p), o_row);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` with a dense right operand.
    pub fn t_mul_dense(&self, rhs: &Dense) -> Result<Dense> {
        if self.rows != rhs.rows() {
            return Err(Error::shape("t_matmul", self.shape(), rhs.shape()));
        }
        let n = rhs.cols();
        let mut out = Dense::zeros(self.cols, n);
        for i in 0..self.rows {
            let b_row = rhs.row(i);
            for (p, a) in self.row_entries(i) {
                if a == 0.0 {
                    continue;
                }
                axpy(a, b_row, out.row_mut(p));
            }
        }
        Ok(out)
    }
}
