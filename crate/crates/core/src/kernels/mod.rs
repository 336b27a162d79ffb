//! Linear algebra building blocks: CSR storage, a banded direct solver,
//! dense QR and eigendecomposition, FFTs and mode products.

mod banded;
mod dense;
mod eig;
mod fft;
mod sparse;
mod tensor;

pub use banded::BandedLu;
pub use dense::{frob_dot, hcat, qr_economy, split_real, to_complex};
pub use eig::{dense_eig, dense_eig_with, is_symmetric, EigOptions, Eigendecomposition};
pub use fft::{fft, ifft, FftPlan};
pub use sparse::SparseMatrix;
pub use tensor::{kron_apply, mode_product};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("matrix is singular (zero pivot at column {index})")]
    SingularMatrix { index: usize },
    #[error("matrix is not numerically diagonalizable (eigenvector condition {cond:e})")]
    NonDiagonalizable { cond: f64 },
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Sparse direct factorization of `a - shift * I`.
pub fn sparse_factorize(a: &SparseMatrix, shift: f64) -> Result<BandedLu, KernelError> {
    BandedLu::factor(a, shift)
}
