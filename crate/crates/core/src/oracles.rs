//! Brute-force references: time stepping, the assembled all-at-once system
//! and the closed-form solution of the 1D heat example.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::discretization::{LowRankRhs, ProblemSpec, SpaceOperator};
use crate::kernels::{BandedLu, KernelError, SparseMatrix};
use crate::timeops::TimeOperator;

/// Largest `n^d L` accepted by [`dense_kron_solve`].
pub const DENSE_KRON_LIMIT: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("step matrix is singular: {0}")]
    SingularOperator(KernelError),
    #[error("all-at-once system has {size} unknowns, limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMethod {
    Timestep,
    DenseKron,
    Analytic,
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    /// `n^d × L`, column `k` the unknown state `u_{s-1+k}`.
    pub u: DMatrix<f64>,
    pub method: OracleMethod,
}

fn check(op: &SpaceOperator, rhs: &LowRankRhs, timeop: &TimeOperator) -> Result<(), OracleError> {
    if rhs.left.nrows() != op.dim() || rhs.right.nrows() != timeop.dim() {
        return Err(OracleError::Shape(format!(
            "rhs is {}x{} (via rank {}), expected {}x{}",
            rhs.left.nrows(),
            rhs.right.nrows(),
            rhs.rank(),
            op.dim(),
            timeop.dim()
        )));
    }
    Ok(())
}

/// `(I - P + τβ K̄) u_k = rhs_k + Σ_j α_j u_{k-j}`, one factorization for all steps.
pub fn timestep_solve(op: &SpaceOperator, rhs: &LowRankRhs, timeop: &TimeOperator) -> Result<OracleSolution, OracleError> {
    check(op, rhs, timeop)?;
    let lu = BandedLu::factor(&op.step_matrix(), 0.0).map_err(OracleError::SingularOperator)?;
    let (n, l) = (op.dim(), timeop.dim());
    let mut u = DMatrix::zeros(n, l);
    for k in 0..l {
        let mut b: DVector<f64> = &rhs.left * rhs.right.row(k).transpose();
        for (j, &a) in timeop.alpha.iter().enumerate() {
            if k > j {
                b.axpy(a, &u.column(k - j - 1), 1.0);
            }
        }
        lu.solve_in_place(b.as_mut_slice());
        u.set_column(k, &b);
    }
    Ok(OracleSolution { u, method: OracleMethod::Timestep })
}

/// Solves `(I_L ⊗ A - Σ ⊗ I) vec(U) = vec(rhs)` in one piece.
pub fn dense_kron_solve(op: &SpaceOperator, rhs: &LowRankRhs, timeop: &TimeOperator) -> Result<OracleSolution, OracleError> {
    check(op, rhs, timeop)?;
    let (n, l) = (op.dim(), timeop.dim());
    if n * l > DENSE_KRON_LIMIT {
        return Err(OracleError::TooLarge { size: n * l, limit: DENSE_KRON_LIMIT });
    }
    let a = op.step_matrix();
    let sigma = SparseMatrix::from_dense(&timeop.sigma());
    let big = SparseMatrix::kron(&SparseMatrix::identity(l), &a).add_scaled(1.0, &SparseMatrix::kron(&sigma, &SparseMatrix::identity(n)), -1.0);
    let lu = BandedLu::factor(&big, 0.0).map_err(OracleError::SingularOperator)?;
    let mut x = rhs.to_dense();
    lu.solve_in_place(x.as_mut_slice());
    Ok(OracleSolution { u: x, method: OracleMethod::DenseKron })
}

/// `u(x, t) = sin(x) e^{-t}`.
pub fn analytic_example1(x: f64, t: f64) -> f64 {
    x.sin() * (-t).exp()
}

/// The closed form sampled on the unknown time levels of a 1D grid on `[0, π]`.
pub fn analytic_example1_grid(nodes: &[f64], times: &[f64]) -> OracleSolution {
    let u = DMatrix::from_fn(nodes.len(), times.len(), |i, k| analytic_example1(nodes[i], times[k]));
    OracleSolution { u, method: OracleMethod::Analytic }
}

/// A problem's closed-form solution on the unknown levels `t_s, .., t_ℓ`, if it has one.
pub fn sample_exact(spec: &ProblemSpec) -> Option<OracleSolution> {
    let exact = spec.exact.as_ref()?;
    let grid = &spec.grid;
    let nodes: Vec<Vec<f64>> = (0..grid.d).map(|k| grid.nodes(k)).collect();
    let points: Vec<[f64; 3]> = (0..grid.num_nodes()).map(|i| grid.point(i, &nodes)).collect();
    let cols = grid.ell + 1 - spec.s;
    let u = DMatrix::from_fn(points.len(), cols, |i, k| exact(&points[i][..grid.d], grid.time(spec.s + k)));
    Some(OracleSolution { u, method: OracleMethod::Analytic })
}

/// `‖a - b‖_F / ‖b‖_F`.
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let nb = b.norm();
    if nb == 0.0 {
        (a - b).norm()
    } else {
        (a - b).norm() / nb
    }
}
