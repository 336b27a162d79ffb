//! Dense eigendecomposition `A = S Λ S^{-1}`.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use super::dense::to_complex;
use super::KernelError;

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    /// Largest accepted `‖S‖_F ‖S^{-1}‖_F`.
    pub cond_limit: f64,
    /// Largest accepted dimension.
    pub max_dim: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { cond_limit: 1e12, max_dim: 4096 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigendecomposition {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// `‖S‖_F ‖S^{-1}‖_F`.
    pub cond: f64,
    pub symmetric: bool,
}

pub fn is_symmetric(a: &DMatrix<f64>) -> bool {
    a.is_square() && (a - a.transpose()).norm() <= 1e-14 * a.norm().max(f64::MIN_POSITIVE)
}

pub fn dense_eig(a: &DMatrix<f64>) -> Result<Eigendecomposition, KernelError> {
    dense_eig_with(a, EigOptions::default())
}

pub fn dense_eig_with(a: &DMatrix<f64>, opts: EigOptions) -> Result<Eigendecomposition, KernelError> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(KernelError::DimensionMismatch(format!("eig of a {}x{} matrix", n, a.ncols())));
    }
    if n > opts.max_dim {
        return Err(KernelError::TooLarge { dim: n, limit: opts.max_dim });
    }
    if is_symmetric(a) {
        let sym = (a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let vectors = to_complex(&eig.eigenvectors);
        let inverse = vectors.transpose();
        return Ok(Eigendecomposition {
            values: eig.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            cond: vectors.norm() * inverse.norm(),
            vectors,
            inverse,
            symmetric: true,
        });
    }

    let schur = Schur::try_new(to_complex(a), f64::EPSILON, 100 * n.max(10))
        .ok_or(KernelError::NonDiagonalizable { cond: f64::INFINITY })?;
    let (q, t) = schur.unpack();
    let x = triangular_eigenvectors(&t);
    let vectors = q * x;
    let inverse = vectors
        .clone()
        .lu()
        .try_inverse()
        .ok_or(KernelError::NonDiagonalizable { cond: f64::INFINITY })?;
    let cond = vectors.norm() * inverse.norm();
    if !cond.is_finite() || cond > opts.cond_limit {
        return Err(KernelError::NonDiagonalizable { cond });
    }
    Ok(Eigendecomposition {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors,
        inverse,
        cond,
        symmetric: false,
    })
}

/// Unit-norm eigenvectors of an upper triangular matrix by back substitution.
/// Near-equal diagonal entries are separated by a tiny perturbation, so a
/// defective input yields nearly parallel columns rather than a failure.
fn triangular_eigenvectors(t: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let small = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    let mut x = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        x[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            x[(i, k)] = -s / d;
        }
        let nrm = x.column(k).norm();
        x.column_mut(k).unscale_mut(nrm);
    }
    x
}
