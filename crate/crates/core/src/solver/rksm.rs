use std::time::Instant;

use super::eksm::{boundary_defect_sq, check_shapes, projected_left, zero_solution, Observer};
use super::projected::{inner_solve, ProjectedMatrix, ProjectedProblem};
use super::solution::{memory_rksm_full, FactoredSolution, IterationState, Method, SolveReport};
use super::{validate, SolveError, SolverOptions};
use crate::discretization::{LowRankRhs, SpaceOperator};
use crate::kernels::{dense_eig, frob_dot, qr_economy};
use crate::krylov::{
    kronecker_sum_bounds, matrix_bounds, next_shift, rational_arnoldi_init, rational_arnoldi_step, KrylovError, KrylovOperator, ShiftState,
};
use crate::timeops::TimeOperator;

/// Left projection onto a rational Krylov space with adaptive real poles.
pub fn solve_rksm(
    op: &SpaceOperator,
    rhs: &LowRankRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, None)
}

/// As [`solve_rksm`], calling `observer` after every projected solve.
pub fn solve_rksm_observed(
    op: &SpaceOperator,
    rhs: &LowRankRhs,
    timeop: &TimeOperator,
    opts: &SolverOptions,
    observer: &mut dyn FnMut(&IterationState),
) -> Result<(FactoredSolution, SolveReport), SolveError> {
    run(op, rhs, timeop, opts, Some(observer))
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
        return Ok(zero_solution(Method::Rksm, nd, l, memory_rksm_full(1, q, nd, l), start));
    }
    let tb = timeop.tau_beta();
    let k = op.assembled();
    let (s_min, s_max) = match op.factors() {
        Some(f) => kronecker_sum_bounds(f, opts.seed),
        None => matrix_bounds(k, op.lu().ok(), opts.seed),
    };
    log::debug!("rksm shift interval [{s_min:e}, {s_max:e}]");
    let mut shifts = ShiftState::new(s_min, s_max);
    let kop = KrylovOperator::new(k, op.boundary_indices().to_vec());
    let mut basis = rational_arnoldi_init(&kop, &rhs.left)?;

    let mut residuals = Vec::new();
    let mut formulas = Vec::new();
    let mut used = opts.inner;
    let mut result = None;
    for m in 1..=opts.m_max {
        let s = next_shift(&shifts);
        let xi = -s;
        let broke = match rational_arnoldi_step(&kop, &mut basis, xi) {
            Ok(()) => false,
            Err(KrylovError::Breakdown) => true,
            Err(e) => return Err(e.into()),
        };
        shifts.used.push((s, *basis.block_widths().last().expect("block pushed")));

        let r = basis.active_dim();
        let t_m = basis.t_proj();
        let prob = ProjectedProblem {
            a_small: ProjectedMatrix::Dense(basis.i_proj() + &t_m * tb),
            rhs_left: projected_left(&basis),
            rhs_right: rhs.right.clone(),
            timeop,
        };
        let (y, inner) = inner_solve(&prob, opts.inner)?;
        used = inner;

        // R = τβ G Z - (I - V_m V_m^T) S X with
        // G = ξ 𝓥 - (I - V_m V_m^T) K 𝓥 and Z = E^T H̲ H^{-1} Y
        let w = basis.dim() - r;
        let z = match basis.h_square().lu().solve(&y) {
            Some(hy) => basis.h_last_row() * hy,
            None => return Err(SolveError::SingularProjectedMatrix),
        };
        let last = basis.last_block();
        let vm = basis.v.columns(0, r);
        let vtkv = basis.t_full.view((0, r), (r, w));
        let g = &last * xi - &basis.k_last + vm * vtkv;
        let (_, rg) = qr_economy(&g);
        let formula = tb * (rg * &z).norm();
        let b_m = basis.boundary_rows.columns(0, r).into_owned();
        let x = &b_m * &y;
        let g_b = kop.boundary_rows(&g);
        let cross = frob_dot(&(g_b * &z), &x);
        let res_sq = formula * formula - 2.0 * tb * cross + boundary_defect_sq(&b_m, &basis.i_proj(), &x);
        let residual = res_sq.max(0.0).sqrt();
        residuals.push(residual / delta);
        formulas.push(formula / delta);
        log::debug!("rksm m={m} dim={r} pole={xi:e} residual={:e} inner={}", residual / delta, inner.name());

        shifts.ritz = dense_eig(&t_m).map(|e| e.values).unwrap_or_default();

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
        log::warn!("rksm stopped after {m} iterations at relative residual {:e}", residuals.last().unwrap());
    }
    let report = SolveReport {
        method: Method::Rksm,
        iterations: m,
        residual_history: residuals,
        formula_history: formulas,
        delta,
        converged,
        basis_dims: vec![r],
        start_ranks: vec![q],
        memory_units: memory_rksm_full(m, q, nd, l),
        wall_time: start.elapsed().as_secs_f64(),
        inner_solver: used,
        shifts: shifts.used.iter().map(|&(s, _)| s).collect(),
    };
    Ok((sol, report))
}
