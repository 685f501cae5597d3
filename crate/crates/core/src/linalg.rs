//! Minimal dense and compressed-row matrices.
//!
//! Only what the graph operators and the GCN need: row-major dense storage,
//! CSR storage with sorted column indices, and the products between them.

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "dense matrix storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self · other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (oj, &bkj) in o.iter_mut().zip(other.row(k)) {
                    *oj += aik * bkj;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context: "transposed matmul row count",
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ari) in a.iter().enumerate() {
                if ari == 0.0 {
                    continue;
                }
                for (oj, &brj) in out.row_mut(i).iter_mut().zip(b) {
                    *oj += ari * brj;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`
    pub fn matmul_t(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "matmul_t inner dimension",
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(DenseMatrix::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        }))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Square or rectangular matrix in compressed sparse row layout.
///
/// Column indices within each row are strictly increasing and every stored
/// value is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from per-row `(column, value)` lists. Entries are sorted,
    /// duplicates summed and zeros dropped.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut indptr = Vec::with_capacity(n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::DimensionMismatch {
                        context: "csr column index",
                        expected: cols,
                        found: c,
                    });
                }
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        let mut m = Self {
            rows: n_rows,
            cols,
            indptr,
            indices,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row = vec![Vec::new(); rows];
        for (i, j, v) in triplets {
            if i >= rows {
                return Err(Error::DimensionMismatch {
                    context: "csr row index",
                    expected: rows,
                    found: i,
                });
            }
            per_row[i].push((j, v));
        }
        Self::from_rows(cols, per_row)
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_rows(m.cols(), rows).expect("dense source has valid indices")
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut indptr = Vec::with_capacity(self.rows + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column indices, values)` of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d.set(i, j, v);
        }
        d
    }

    /// `diag(left) · self · diag(right)`
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        assert_eq!(left.len(), self.rows);
        assert_eq!(right.len(), self.cols);
        let mut out = self.clone();
        for (i, &l) in left.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.values[k] = self.values[k] * (l * right[self.indices[k]]);
            }
        }
        out.drop_zeros();
        out
    }

    /// `D^{-1/2} M D^{-1/2}` for a degree vector `d`, computed entrywise as
    /// `m_ij / sqrt(d_i d_j)`; rows or columns with zero degree become zero.
    /// The result is exactly symmetric whenever `self` is.
    pub fn normalize_symmetric(&self, degree: &[f64]) -> CsrMatrix {
        assert_eq!(self.rows, self.cols);
        assert_eq!(degree.len(), self.rows);
        let mut out = self.clone();
        for i in 0..self.rows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let dd = degree[i] * degree[self.indices[k]];
                out.values[k] = if dd > 0.0 {
                    self.values[k] / dd.sqrt()
                } else {
                    0.0
                };
            }
        }
        out.drop_zeros();
        out
    }

    /// `a·self + b·I` (square only).
    pub fn add_scaled_identity(&self, a: f64, b: f64) -> CsrMatrix {
        assert_eq!(self.rows, self.cols);
        let rows = (0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                let mut r: Vec<(usize, f64)> =
                    idx.iter().zip(val).map(|(&j, &v)| (j, a * v)).collect();
                r.push((i, b));
                r
            })
            .collect();
        CsrMatrix::from_rows(self.cols, rows).expect("indices already validated")
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matvec_with(x, Execution::default())
    }

    pub fn matvec_with(&self, x: &[f64], exec: Execution) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "sparse matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(exec.map_range(self.rows, |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
        }))
    }

    /// Sparse-times-dense product `self · b`.
    pub fn matmul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul_dense_with(b, Execution::default())
    }

    pub fn matmul_dense_with(&self, b: &DenseMatrix, exec: Execution) -> Result<DenseMatrix> {
        if b.rows() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "sparse-dense product inner dimension",
                expected: self.cols,
                found: b.rows(),
            });
        }
        let k = b.cols();
        let mut out = DenseMatrix::zeros(self.rows, k);
        if k == 0 {
            return Ok(out);
        }
        // Row blocks keep rayon task overhead low on tall thin products.
        const BLOCK: usize = 64;
        exec.for_each_chunk(out.as_mut_slice(), BLOCK * k, |block, chunk| {
            let first = block * BLOCK;
            for (r, orow) in chunk.chunks_mut(k).enumerate() {
                let (idx, val) = self.row(first + r);
                for (&j, &v) in idx.iter().zip(val) {
                    for (o, &bj) in orow.iter_mut().zip(b.row(j)) {
                        *o += v * bj;
                    }
                }
            }
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_merges_duplicates_and_drops_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            3,
            vec![
                (0, 2, 1.0),
                (0, 0, 2.0),
                (0, 2, 0.5),
                (1, 1, 0.0),
                (1, 0, -1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.row(0).0, &[0, 2]);
    }

    #[test]
    fn out_of_range_column_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, vec![(0, 2, 1.0)]).is_err());
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn sparse_dense_product_matches_dense() {
        let a = DenseMatrix::from_fn(130, 130, |i, j| {
            if (i * 7 + j * 3) % 5 == 0 {
                (i as f64 - j as f64) * 0.1
            } else {
                0.0
            }
        });
        let b = DenseMatrix::from_fn(130, 4, |i, j| (i * 4 + j) as f64 * 0.01 - 1.0);
        let s = CsrMatrix::from_dense(&a);
        let want = a.matmul(&b).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let got = s.matmul_dense_with(&b, exec).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-12);
        }
        assert_eq!(
            s.matmul_dense_with(&b, Execution::Sequential).unwrap(),
            s.matmul_dense_with(&b, Execution::Parallel).unwrap()
        );
        let x: Vec<f64> = (0..130).map(|i| (i as f64).cos()).collect();
        let y = s.matvec(&x).unwrap();
        let yd = a.matmul(&DenseMatrix::column(&x)).unwrap();
        assert!(max_abs_diff(&y, yd.as_slice()) < 1e-12);
    }

    #[test]
    fn transposed_products() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let b = DenseMatrix::from_fn(3, 4, |i, j| (i * j) as f64 + 1.0);
        let want = a.transpose().matmul(&b).unwrap();
        assert_eq!(a.t_matmul(&b).unwrap(), want);
        let c = DenseMatrix::from_fn(5, 2, |i, j| (i as f64) - (j as f64));
        assert_eq!(a.matmul_t(&c).unwrap(), a.matmul(&c.transpose()).unwrap());
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn scale_and_identity_shift() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        let s = m.scale_rows_cols(&[0.5, 1.0], &[1.0, 0.25]);
        assert_eq!(s.get(0, 1), 0.25);
        assert_eq!(s.get(1, 0), 2.0);
        let t = m.add_scaled_identity(-1.0, 1.0);
        assert_eq!(t.to_dense().as_slice(), &[1.0, -2.0, -2.0, 1.0]);
    }
}
