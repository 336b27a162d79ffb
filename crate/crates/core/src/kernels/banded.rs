//! Banded LU with partial pivoting.
//!
//! Finite-difference operators in lexicographic order have bandwidth
//! `n^(d-1)`, so a band factorization is a direct sparse solver for them.
//! Storage follows the LAPACK `gbtrf` layout: column `j` holds rows
//! `j - ku - kl ..= j + kl`, the extra `kl` rows absorb pivoting fill.

use nalgebra::DMatrix;

use super::{KernelError, SparseMatrix};

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factors `a - shift * I`.
    pub fn factor(a: &SparseMatrix, shift: f64) -> Result<Self, KernelError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(KernelError::DimensionMismatch(format!(
                "banded LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        let mut anorm = shift.abs();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                ab[j * ldab + kv + i - j] = v;
                anorm = anorm.max(v.abs());
            }
            ab[i * ldab + kv] -= shift;
        }
        let tiny = f64::EPSILON * anorm;

        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = ab[col + kv].abs();
            for t in 1..=km {
                let v = ab[col + kv + t].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if !(best > tiny) {
                return Err(KernelError::SingularMatrix { index: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    ab.swap(base + j - c + jp, base + j - c);
                }
            }
            let pivot = ab[col + kv];
            for t in 1..=km {
                ab[col + kv + t] /= pivot;
            }
            for c in j + 1..=ju {
                let cbase = c * ldab + kv;
                let f = ab[cbase + j - c];
                if f != 0.0 {
                    for t in 1..=km {
                        ab[cbase + j + t - c] -= ab[col + kv + t] * f;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ab, ipiv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        let ldab = 2 * self.kl + self.ku + 1;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                let km = kl.min(n - 1 - j);
                for t in 1..=km {
                    b[j + t] -= self.ab[j * ldab + kv + t] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.ab[col + i - j] * bj;
                }
            }
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for every column of `b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for c in 0..x.ncols() {
            self.solve_in_place(x.column_mut(c).as_mut_slice());
        }
        x
    }
}
