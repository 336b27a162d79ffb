use nalgebra::{DMatrix, DVector};

use super::{InnerSolver, SolveError};
use crate::kernels::kron_apply;

/// `U = V Y` (full) or `U = (B_d ⊗ .. ⊗ B_1) Y` (tensor, `bases[0]` on `x`).
#[derive(Clone, Debug)]
pub enum FactoredSolution {
    Full { v: DMatrix<f64>, y: DMatrix<f64> },
    Tensor { bases: Vec<DMatrix<f64>>, y: DMatrix<f64> },
}

impl FactoredSolution {
    pub fn y(&self) -> &DMatrix<f64> {
        match self {
            FactoredSolution::Full { y, .. } | FactoredSolution::Tensor { y, .. } => y,
        }
    }

    /// Number of stored time columns.
    pub fn num_steps(&self) -> usize {
        self.y().ncols()
    }

    pub fn space_dim(&self) -> usize {
        match self {
            FactoredSolution::Full { v, .. } => v.nrows(),
            FactoredSolution::Tensor { bases, .. } => bases.iter().map(|b| b.nrows()).product(),
        }
    }

    fn expand(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            FactoredSolution::Full { v, .. } => v * y,
            FactoredSolution::Tensor { bases, .. } => kron_apply(y, &bases.iter().collect::<Vec<_>>()),
        }
    }

    /// The `k`-th unknown time slice (1-based).
    pub fn extract_snapshot(&self, k: usize) -> Result<DVector<f64>, SolveError> {
        let len = self.num_steps();
        if k == 0 || k > len {
            return Err(SolveError::IndexOutOfRange { index: k, len });
        }
        let col = self.y().column(k - 1).into_owned();
        let u = self.expand(&DMatrix::from_column_slice(col.len(), 1, col.as_slice()));
        Ok(u.column(0).into_owned())
    }

    /// All time slices; `n^d × L`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        self.expand(self.y())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Eksm,
    Rksm,
    EksmTensor,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eksm => "eksm",
            Method::Rksm => "rksm",
            Method::EksmTensor => "eksm-tensor",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// `‖R_m‖_F / δ` per iteration, including the boundary term when present.
    pub residual_history: Vec<f64>,
    /// The closed-form coupling term alone, `τβ ‖E^T T̲ Y‖_F / δ` and its analogues.
    pub formula_history: Vec<f64>,
    pub delta: f64,
    pub converged: bool,
    /// Columns of each basis (one per direction on the tensor path).
    pub basis_dims: Vec<usize>,
    /// Rank of the starting block: `q` for the full methods, `p_i` per direction on the tensor path.
    pub start_ranks: Vec<usize>,
    pub memory_units: u64,
    pub wall_time: f64,
    pub inner_solver: InnerSolver,
    /// RKSM pole magnitudes `s_j` (poles at `-s_j`).
    pub shifts: Vec<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Per-iteration snapshot handed to observers.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    /// Absolute residual norm.
    pub residual: f64,
    /// Absolute closed-form coupling term.
    pub formula_residual: f64,
    pub delta: f64,
    pub solution: &'a FactoredSolution,
}

fn u(x: usize) -> u64 {
    x as u64
}

/// `2(m+1) q (n^d + L)`.
pub fn memory_eksm_full(m: usize, q: usize, nd: usize, l: usize) -> u64 {
    2 * u(m + 1) * u(q) * (u(nd) + u(l))
}

/// `(m+1) q (n^d + L)`.
pub fn memory_rksm_full(m: usize, q: usize, nd: usize, l: usize) -> u64 {
    u(m + 1) * u(q) * (u(nd) + u(l))
}

/// `2(m+1) Σ p_i n + 2^d (m+1)^d Π p_i L`.
pub fn memory_eksm_tensor(m: usize, p: &[usize], n: usize, l: usize) -> u64 {
    let d = p.len() as u32;
    2 * u(m + 1) * p.iter().map(|&x| u(x)).sum::<u64>() * u(n) + 2u64.pow(d) * u(m + 1).pow(d) * p.iter().map(|&x| u(x)).product::<u64>() * u(l)
}

/// `(m+1) Σ p_i n + (m+1)^d Π p_i L`.
pub fn memory_rksm_tensor(m: usize, p: &[usize], n: usize, l: usize) -> u64 {
    let d = p.len() as u32;
    u(m + 1) * p.iter().map(|&x| u(x)).sum::<u64>() * u(n) + u(m + 1).pow(d) * p.iter().map(|&x| u(x)).product::<u64>() * u(l)
}
