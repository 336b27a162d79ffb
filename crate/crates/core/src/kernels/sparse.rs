//! Compressed sparse row storage with sorted column indices.

use nalgebra::DMatrix;

/// CSR matrix. Column indices inside each row are strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and explicit zeros are kept only if they come from a cancellation.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                indices.push(j);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: d.to_vec(),
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] = v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Left multiplication by a diagonal matrix.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.data[k] *= d[i];
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&j, &b) in cb.iter().zip(vb) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                if acc[j] != 0.0 {
                    t.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, &t)
    }

    /// Kronecker product `a ⊗ b`; row `(ia, ib)` maps to `ia * b.nrows() + ib`.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut t = Vec::with_capacity(a.nnz() * b.nnz());
        for (ia, ja, va) in a.triplets() {
            for (ib, jb, vb) in b.triplets() {
                t.push((ia * b.nrows + ib, ja * b.ncols + jb, va * vb));
            }
        }
        Self::from_triplets(a.nrows * b.nrows, a.ncols * b.ncols, &t)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// Sparse times dense block.
    pub fn spmv(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for i in 0..self.nrows {
                let (cols, vals) = self.row(i);
                yc[i] = cols.iter().zip(vals).map(|(&j, &v)| v * xc[j]).sum();
            }
        }
        y
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                kl = kl.max(i.saturating_sub(first));
                ku = ku.max(last.saturating_sub(i));
            }
        }
        (kl, ku)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Gershgorin interval `[min(a_ii - r_i), max(a_ii + r_i)]` of the real parts.
    pub fn gershgorin(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    /// Replaces the rows listed in `rows` by `scale * e_i^T`.
    pub fn with_identity_rows(&self, rows: &[usize], scale: f64) -> Self {
        let mut mark = vec![false; self.nrows];
        rows.iter().for_each(|&i| mark[i] = true);
        let mut t: Vec<_> = self.triplets().into_iter().filter(|&(i, _, _)| !mark[i]).collect();
        t.extend(rows.iter().map(|&i| (i, i, scale)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Rows and columns `range` as a square matrix.
    pub fn principal_block(&self, range: std::ops::Range<usize>) -> Self {
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|&(i, j, _)| range.contains(&i) && range.contains(&j))
            .map(|(i, j, v)| (i - range.start, j - range.start, v))
            .collect();
        Self::from_triplets(range.len(), range.len(), &t)
    }

    /// Zeros the listed rows.
    pub fn without_rows(&self, rows: &[usize]) -> Self {
        self.with_identity_rows(rows, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_sparse(n: usize, m: usize, seed: &[f64]) -> SparseMatrix {
        let mut t = Vec::new();
        for (k, &v) in seed.iter().enumerate() {
            t.push(((k * 7) % n, (k * 13 + 3) % m, v));
        }
        SparseMatrix::from_triplets(n, m, &t)
    }

    #[test]
    fn principal_block_of_tridiagonal() {
        let k = SparseMatrix::from_triplets(4, 4, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 3.0), (2, 1, 4.0), (2, 2, 5.0), (3, 3, 6.0)]);
        let b = k.principal_block(1..3).to_dense();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 5.0]));
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(a.row(0).0, &[0, 2]);
        assert_eq!(a.row(0).1, &[2.0, 4.0]);
        assert_eq!(a.get(1, 1), -1.0);
        assert_eq!(a.get(1, 2), 0.0);
    }

    #[test]
    fn kron_matches_dense() {
        let a = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]));
        let b = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 4.0, 5.0, 0.0, 6.0]));
        let k = SparseMatrix::kron(&a, &b).to_dense();
        assert_eq!(k, a.to_dense().kronecker(&b.to_dense()));
    }

    #[test]
    fn bandwidths_of_tridiagonal() {
        let t: Vec<_> = (0usize..5)
            .flat_map(|i| [(i, i, 2.0), (i, (i + 1).min(4), -1.0), (i, i.saturating_sub(1), -1.0)])
            .collect();
        assert_eq!(SparseMatrix::from_triplets(5, 5, &t).bandwidths(), (1, 1));
    }

    proptest! {
        #[test]
        fn spmv_matches_dense(vals in proptest::collection::vec(-5.0f64..5.0, 1..40),
                              xs in proptest::collection::vec(-1.0f64..1.0, 14)) {
            let a = random_sparse(6, 7, &vals);
            let x = DMatrix::from_column_slice(7, 2, &xs);
            let y = a.spmv(&x);
            let yd = a.to_dense() * &x;
            prop_assert!((y - yd).norm() <= 1e-12);
        }

        #[test]
        fn transpose_and_product_match_dense(vals in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
            let a = random_sparse(5, 5, &vals);
            let b = a.transpose();
            prop_assert_eq!(b.to_dense(), a.to_dense().transpose());
            let p = a.mul(&b).to_dense();
            prop_assert!((p - a.to_dense() * b.to_dense()).norm() <= 1e-10);
        }
    }
}
