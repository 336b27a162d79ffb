//! Block extended and rational Arnoldi processes with explicit projections.

mod basis;
mod extended;
mod orth;
mod rational;
mod shifts;

pub use basis::{BasisKind, KrylovBasis, KrylovOperator};
pub use extended::{extended_arnoldi_init, extended_arnoldi_step};
pub use orth::{orthonormalize_against, Orthonormalized, DEFLATION_TOL};
pub use rational::{rational_arnoldi_init, rational_arnoldi_step, rational_arnoldi_step_with};
pub use shifts::{kronecker_sum_bounds, matrix_bounds, next_shift, ShiftState};

use thiserror::Error;

use crate::kernels::KernelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("space operator could not be factored: {0}")]
    SingularOperator(KernelError),
    #[error("Krylov breakdown: the new block lies in the current space")]
    Breakdown,
    #[error("K - ({shift})I is singular")]
    ShiftSingular { shift: f64 },
    #[error("starting block is zero")]
    ZeroStart,
}
