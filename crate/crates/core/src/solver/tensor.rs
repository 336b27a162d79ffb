use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::eksm::Observer;
use super::projected::{inner_solve, ProjectedMatrix, ProjectedProblem};
use super::solution::{memory_eksm_tensor, FactoredSolution, IterationState, Method, SolveReport};
use super::{validate, SolveError, SolverOptions};
use crate::discretization::{SeparableRhs, SpaceOperator};
use crate::kernels::mode_product;
use crate::krylov::{extended_arnoldi_init, extended_arnoldi_step, KrylovBasis, KrylovError, KrylovOperator};
use crate::timeops::TimeOperator;

/// Extended Krylov with one space per direction for Kronecker-sum operators
/// and separable data; `U ≈ (Q_d ⊗ .. ⊗ Q_1) Y`.
pub fn solve_eksm_separable(
    op: &SpaceOperator,
    rhs: &SeparableRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, None)
}

/// As [`solve_eksm_separable`], calling `observer` after every projected solve.
pub fn solve_eksm_separable_observed(
    op: &SpaceOperator,
    rhs: &SeparableRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
    observer: &mut dyn FnMut(&IterationState),
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, Some(observer))
}

struct Direction<'a> {
    op: KrylovOperator<'a>,
    basis: KrylovBasis,
    /// Rank of the starting block.
    p: usize,
    stalled: bool,
}

fn run(
    op: &SpaceOperator,
    rhs: &SeparableRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
    mut observer: Observer,
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    validate(opts)?;
    let start = Instant::now();
    let factors = op.factors().ok_or_else(|| SolveError::NotSeparable("operator is not a Kronecker sum".into()))?;
    let d = factors.len();
    if d < 2 {
        return Err(SolveError::NotSeparable("the tensorized path needs d >= 2".into()));
    }
    if timeop.s != 1 {
        return Err(SolveError::NotSeparable("the tensorized path supports s = 1 only".into()));
    }
    if rhs.terms.iter().any(|t| t.factors.len() != d || t.time.len() != timeop.dim()) {
        return Err(SolveError::NotSeparable("term shapes do not match the operator".into()));
    }
    let (n, l) = (op.n, timeop.dim());
    let delta = rhs.norm();
    if delta == 0.0 {
        let (sol, mut report) = super::eksm::zero_solution(Method::EksmTensor, op.dim(), l, memory_eksm_tensor(1, &vec![0; d], n, l), start);
        report.basis_dims = vec![0; d];
        report.start_ranks = vec![0; d];
        return Ok((sol, report));
    }
    let tb = timeop.tau_beta();
    let right = DMatrix::from_fn(l, rhs.terms.len(), |k, t| rhs.terms[t].time[k]);

    // The data vanish on the boundary and the boundary rows of each factor
    // are identity rows, so every Krylov vector lives on the interior nodes.
    // Working with the interior block keeps rounding noise off the boundary.
    if rhs.terms.iter().flat_map(|t| &t.factors).any(|f| f[0] != 0.0 || f[n - 1] != 0.0) {
        return Err(SolveError::NotSeparable("separable data must vanish on the boundary".into()));
    }
    let interior: Vec<_> = factors.iter().map(|f| f.principal_block(1..n - 1)).collect();
    let mut dirs = interior
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let kop = KrylovOperator::new(f, Vec::new());
            let b = DMatrix::from_fn(n - 2, rhs.terms.len(), |row, t| rhs.terms[t].factors[i][row + 1]);
            let basis = extended_arnoldi_init(&kop, &b)?;
            let p = first_rank(&basis);
            Ok(Direction { op: kop, basis, p, stalled: false })
        })
        .collect::<Result<Vec<_>, KrylovError>>()?;

    let mut residuals = Vec::new();
    let mut formulas = Vec::new();
    let mut used = opts.inner;
    let mut result = None;
    for m in 1..=opts.m_max {
        dirs.par_iter_mut().filter(|dir| !dir.stalled).try_for_each(|dir| match extended_arnoldi_step(&dir.op, &mut dir.basis) {
            Ok(()) => Ok(()),
            Err(KrylovError::Breakdown) => {
                dir.stalled = true;
                Ok(())
            }
            Err(e) => Err(e),
        })?;

        let dims: Vec<usize> = dirs.iter().map(|dir| dir.basis.active_dim()).collect();
        let left = projected_left(&dirs, &dims);
        let prob = ProjectedProblem {
            a_small: ProjectedMatrix::KroneckerSum { factors: dirs.iter().map(|dir| dir.basis.t_proj()).collect(), tau_beta: tb },
            rhs_left: left,
            rhs_right: right.clone(),
            timeop,
        };
        let (y, inner) = inner_solve(&prob, opts.inner)?;
        used = inner;

        // one orthogonal coupling term per direction
        let res_sq: f64 = dirs.iter().enumerate().map(|(i, dir)| mode_product(&y, &dims, i, &dir.basis.t_under()).norm_squared()).sum();
        let residual = tb * res_sq.sqrt();
        residuals.push(residual / delta);
        formulas.push(residual / delta);
        log::debug!("eksm-tensor m={m} dims={dims:?} residual={:e} inner={}", residual / delta, inner.name());

        let all_stalled = dirs.iter().all(|dir| dir.stalled);
        let done = residual <= opts.tol * delta || all_stalled || m == opts.m_max;
        if observer.is_some() || done {
            let sol = FactoredSolution::Tensor { bases: dirs.iter().map(|dir| pad_boundary(&dir.basis.active_v())).collect(), y };
            if let Some(obs) = observer.as_mut() {
                obs(&IterationState { iteration: m, residual, formula_residual: residual, delta, solution: &sol });
            }
            if done {
                result = Some((sol, m, residual <= opts.tol * delta, dims));
                break;
            }
        }
    }
    let (sol, m, converged, dims) = result.expect("loop runs at least once");
    if !converged {
        log::warn!("eksm-tensor stopped after {m} iterations at relative residual {:e}", residuals.last().unwrap());
    }
    let p: Vec<usize> = dirs.iter().map(|dir| dir.p).collect();
    let report = SolveReport {
        method: Method::EksmTensor,
        iterations: m,
        residual_history: residuals,
        formula_history: formulas,
        delta,
        converged,
        basis_dims: dims,
        start_ranks: p.clone(),
        memory_units: memory_eksm_tensor(m, &p, n, l),
        wall_time: start.elapsed().as_secs_f64(),
        inner_solver: used,
        shifts: Vec::new(),
    };
    Ok((sol, report))
}

/// Rank of the starting block: the rows of `γ` carrying the data.
fn first_rank(basis: &KrylovBasis) -> usize {
    (0..basis.gamma.nrows()).filter(|&i| basis.gamma.row(i).iter().any(|&v| v != 0.0)).count()
}

/// Column `t` is `γ_d[:, t] ⊗ .. ⊗ γ_1[:, t]`, each `γ_i` padded to its active dimension.
fn projected_left(dirs: &[Direction], dims: &[usize]) -> DMatrix<f64> {
    let q = dirs[0].basis.gamma.ncols();
    let mut left = DMatrix::zeros(dims.iter().product(), q);
    for t in 0..q {
        let mut col = nalgebra::DVector::from_element(1, 1.0);
        for (dir, &r) in dirs.iter().zip(dims) {
            let mut g = nalgebra::DVector::zeros(r);
            let gamma = &dir.basis.gamma;
            g.rows_mut(0, gamma.nrows()).copy_from(&gamma.column(t));
            col = g.kronecker(&col);
        }
        left.set_column(t, &col);
    }
    left
}

/// Zero rows for the two boundary nodes.
fn pad_boundary(v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(v.nrows() + 2, v.ncols());
    out.rows_mut(1, v.nrows()).copy_from(v);
    out
}
