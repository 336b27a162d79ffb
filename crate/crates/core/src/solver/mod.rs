//! Projection solvers for `(I - P + τβ K̄) U - U Σ^T = [u-terms, F_1][e_1.., τβ F_2]^T`.
//!
//! The outer loop grows an extended or rational Krylov space for the space
//! operator; each iteration solves the projected equation with either a
//! column-by-column recursion or the diagonalize-FFT-SMW scheme.

mod eksm;
mod projected;
mod rksm;
mod solution;
mod tensor;

pub use eksm::{solve_eksm, solve_eksm_observed};
pub use projected::{
    inner_solve, inner_solve_fft_smw, inner_solve_sequential, smw_core_dense, smw_core_structured, ProjectedMatrix, ProjectedProblem,
};
pub use rksm::{solve_rksm, solve_rksm_observed};
pub use solution::{
    memory_eksm_full, memory_eksm_tensor, memory_rksm_full, memory_rksm_tensor, FactoredSolution, IterationState, Method, SolveReport,
};
pub use tensor::{solve_eksm_separable, solve_eksm_separable_observed};

use num_complex::Complex64;
use thiserror::Error;

use crate::discretization::DiscretizationError;
use crate::kernels::KernelError;
use crate::krylov::KrylovError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InnerSolver {
    Sequential,
    FftSmw,
}

impl InnerSolver {
    pub fn name(self) -> &'static str {
        match self {
            InnerSolver::Sequential => "sequential",
            InnerSolver::FftSmw => "fft_smw",
        }
    }
}

impl std::str::FromStr for InnerSolver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(InnerSolver::Sequential),
            "fft_smw" | "fft-smw" => Ok(InnerSolver::FftSmw),
            other => Err(format!("unknown inner solver '{other}' (expected fft_smw or sequential)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative residual target `‖R‖_F ≤ tol δ`.
    pub tol: f64,
    pub m_max: usize,
    pub inner: InnerSolver,
    /// Seeds the start vector of the spectral estimates used for RKSM shifts.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, m_max: 60, inner: InnerSolver::FftSmw, seed: 0 }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("projected matrix is singular")]
    SingularProjectedMatrix,
    #[error("projected matrix is not safely diagonalizable (cond {cond:e})")]
    EigFallback { cond: f64 },
    #[error("eigenvalue {lambda} of the projected matrix meets circulant eigenvalue {pi}")]
    ResonantEigenvalue { lambda: Complex64, pi: Complex64 },
    #[error("imaginary residue {residue:e} exceeds 1e-10 relative to ‖Y‖_F = {norm:e}")]
    ImaginaryResidue { residue: f64, norm: f64 },
    #[error("the Sherman-Morrison-Woodbury correction is singular")]
    SmwSingular,
    #[error("problem is not separable: {0}")]
    NotSeparable(String),
    #[error("time index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

impl SolveError {
    /// Errors after which the sequential inner solver is still applicable.
    pub fn is_fft_fallback(&self) -> bool {
        matches!(
            self,
            SolveError::EigFallback { .. } | SolveError::ResonantEigenvalue { .. } | SolveError::ImaginaryResidue { .. } | SolveError::SmwSingular
        )
    }
}

fn validate(opts: &SolverOptions) -> Result<(), SolveError> {
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidOptions(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.m_max == 0 {
        return Err(SolveError::InvalidOptions("m_max must be at least 1".into()));
    }
    Ok(())
}
