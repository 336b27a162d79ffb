use std::time::Instant;

use nalgebra::DMatrix;

use super::projected::{inner_solve, ProjectedMatrix, ProjectedProblem};
use super::solution::{memory_eksm_full, FactoredSolution, IterationState, Method, SolveReport};
use super::{validate, InnerSolver, SolveError, SolverOptions};
use crate::discretization::{LowRankRhs, SpaceOperator};
use crate::kernels::frob_dot;
use crate::krylov::{extended_arnoldi_init, extended_arnoldi_step, KrylovBasis, KrylovError, KrylovOperator};
use crate::timeops::TimeOperator;

pub(super) type Observer<'o> = Option<&'o mut dyn FnMut(&IterationState)>;

/// Left projection onto the extended Krylov space of `K̄` and `[u-terms, F_1]`.
pub fn solve_eksm(
    op: &SpaceOperator,
    rhs: &LowRankRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, None)
}

/// As [`solve_eksm`], calling `observer` after every projected solve.
pub fn solve_eksm_observed(
    op: &SpaceOperator,
    rhs: &LowRankRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
    observer: &mut dyn FnMut(&IterationState),
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, Some(observer))
}

pub(super) fn check_shapes(op: &SpaceOperator, rhs: &LowRankRhs, timeop: &TimeOperator) -> Result<(), SolveError> {
    if rhs.left.nrows() != op.dim() || rhs.right.nrows() != timeop.dim() || rhs.left.ncols() != rhs.right.ncols() {
        return Err(SolveError::InvalidOptions(format!(
            "rhs factors {}x{} and {}x{} do not fit n^d = {} and L = {}",
            rhs.left.nrows(),
            rhs.left.ncols(),
            rhs.right.nrows(),
            rhs.right.ncols(),
            op.dim(),
            timeop.dim()
        )));
    }
    Ok(())
}

/// Trivial solution for a zero right-hand side.
pub(super) fn zero_solution(method: Method, n: usize, l: usize, memory_units: u64, start: Instant) -> (FactoredSolution, SolveReport) {
    let sol = FactoredSolution::Full { v: DMatrix::zeros(n, 0), y: DMatrix::zeros(0, l) };
    let report = SolveReport {
        method,
        iterations: 1,
        residual_history: vec![0.0],
        formula_history: vec![0.0],
        delta: 0.0,
        converged: true,
        basis_dims: vec![0],
        start_ranks: vec![0],
        memory_units,
        wall_time: start.elapsed().as_secs_f64(),
        inner_solver: InnerSolver::Sequential,
        shifts: Vec::new(),
    };
    (sol, report)
}

/// `E_1 γ` padded to the active dimension.
pub(super) fn projected_left(basis: &KrylovBasis) -> DMatrix<f64> {
    let mut left = DMatrix::zeros(basis.active_dim(), basis.gamma.ncols());
    left.rows_mut(0, basis.gamma.nrows()).copy_from(&basis.gamma);
    left
}

/// `‖(I - V_m V_m^T) S X‖_F^2` with `X = B_m Y` the boundary rows of `V_m Y`,
/// split as `‖X - B_m Z‖^2 + tr(Z^T 𝓘_m Z)`, `Z = B_m^T X`, so no
/// difference of large squares is formed.
pub(super) fn boundary_defect_sq(b_m: &DMatrix<f64>, i_m: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    if b_m.nrows() == 0 || x.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let z = b_m.transpose() * x;
    let outside = x - b_m * &z;
    outside.norm_squared() + frob_dot(&z, &(i_m * &z)).max(0.0)
}

fn run(
    op: &SpaceOperator,
    rhs: &LowRankRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
    mut observer: Observer,
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    validate(opts)?;
    check_shapes(op, rhs, timeop)?;
    let start = Instant::now();
    let (nd, l, q) = (op.dim(), timeop.dim(), rhs.rank());
    let delta = rhs.norm();
    if delta == 0.0 {
        return Ok(zero_solution(Method::Eksm, nd, l, memory_eksm_full(1, q, nd, l), start));
    }
    let tb = timeop.tau_beta();
    let kop = KrylovOperator::new(op.assembled(), op.boundary_indices().to_vec());
    let mut basis = extended_arnoldi_init(&kop, &rhs.left)?;

    let mut residuals = Vec::new();
    let mut formulas = Vec::new();
    let mut used = opts.inner;
    let mut result = None;
    for m in 1..=opts.m_max {
        let broke = match extended_arnoldi_step(&kop, &mut basis) {
            Ok(()) => false,
            Err(KrylovError::Breakdown) => true,
            Err(e) => return Err(e.into()),
        };
        let r = basis.active_dim();
        let prob = ProjectedProblem {
            a_small: ProjectedMatrix::Dense(basis.i_proj() + basis.t_proj() * tb),
            rhs_left: projected_left(&basis),
            rhs_right: rhs.right.clone(),
            timeop,
        };
        let (y, inner) = inner_solve(&prob, opts.inner)?;
        used = inner;

        // R = τβ 𝓥_{m+1} C Y - (I - V_m V_m^T) S X
        let cy = basis.t_under() * &y;
        let formula = tb * cy.norm();
        let x = basis.boundary_rows.columns(0, r) * &y;
        let b_next = basis.boundary_rows.columns(r, basis.dim() - r);
        let cross = frob_dot(&cy, &(b_next.transpose() * &x));
        let res_sq = formula * formula - 2.0 * tb * cross + boundary_defect_sq(&basis.boundary_rows.columns(0, r).into_owned(), &basis.i_proj(), &x);
        let residual = res_sq.max(0.0).sqrt();
        residuals.push(residual / delta);
        formulas.push(formula / delta);
        log::debug!("eksm m={m} dim={r} residual={:e} inner={}", residual / delta, inner.name());

        let done = residual <= opts.tol * delta || broke || m == opts.m_max;
        if observer.is_some() || done {
            let sol = FactoredSolution::Full { v: basis.active_v(), y };
            if let Some(obs) = observer.as_mut() {
                obs(&IterationState { iteration: m, residual, formula_residual: formula, delta, solution: &sol });
            }
            if done {
                result = Some((sol, m, residual <= opts.tol * delta, r));
                break;
            }
        }
    }
    let (sol, m, converged, r) = result.expect("loop runs at least once");
    if !converged {
        log::warn!("eksm stopped after {m} iterations at relative residual {:e}", residuals.last().unwrap());
    }
    let report = SolveReport {
        method: Method::Eksm,
        iterations: m,
        residual_history: residuals,
        formula_history: formulas,
        delta,
        converged,
        basis_dims: vec![r],
        start_ranks: vec![q],
        memory_units: memory_eksm_full(m, q, nd, l),
        wall_time: start.elapsed().as_secs_f64(),
        inner_solver: used,
        shifts: Vec::new(),
    };
    Ok((sol, report))
}
