mod common;

use common::*;
use evosylv::discretization::Discretized;
use evosylv::oracles::{dense_kron_solve, relative_error, timestep_solve};
use evosylv::solver::*;

fn opts(tol: f64) -> SolverOptions {
    SolverOptions { tol, m_max: 40, ..Default::default() }
}

type Observed = fn(&Discretized, &SolverOptions, &mut dyn FnMut(&IterationState)) -> Result<(FactoredSolution, SolveReport), SolveError>;

fn eksm(d: &Discretized, o: &SolverOptions, f: &mut dyn FnMut(&IterationState)) -> Result<(FactoredSolution, SolveReport), SolveError> {
    solve_eksm_observed(&d.op, &d.rhs, &d.timeop, o, f)
}

fn rksm(d: &Discretized, o: &SolverOptions, f: &mut dyn FnMut(&IterationState)) -> Result<(FactoredSolution, SolveReport), SolveError> {
    solve_rksm_observed(&d.op, &d.rhs, &d.timeop, o, f)
}

fn tensor(d: &Discretized, o: &SolverOptions, f: &mut dyn FnMut(&IterationState)) -> Result<(FactoredSolution, SolveReport), SolveError> {
    solve_eksm_separable_observed(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, o, f)
}

/// Largest gap between the cheap residual and the assembled one, relative
/// to the latter but floored at `1e-6 δ` where both are rounding noise,
/// and the largest `‖V^T R‖ / δ`, over all iterations.
fn residual_checks(d: &Discretized, solve: Observed, tol: f64) -> (f64, f64, usize) {
    let mut gap: f64 = 0.0;
    let mut galerkin: f64 = 0.0;
    let mut iters = 0;
    let (_, report) = solve(d, &opts(tol), &mut |st| {
        let r = explicit_residual(d, &st.solution.to_dense());
        let explicit = r.norm();
        gap = gap.max((st.residual - explicit).abs() / explicit.max(1e-6 * st.delta));
        galerkin = galerkin.max(projected_residual(st.solution, &r).norm() / st.delta);
        iters += 1;
    })
    .unwrap();
    assert_eq!(iters, report.iterations);
    (gap, galerkin, iters)
}

#[test]
fn zero_rhs_converges_immediately() {
    let mut d = setup("example2", 8, 16, 1);
    d.rhs.left.fill(0.0);
    for (sol, rep) in [
        solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8)).unwrap(),
        solve_rksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8)).unwrap(),
    ] {
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(sol.to_dense().amax(), 0.0);
    }
    let mut sep = d.rhs.separable.clone().unwrap();
    sep.terms.clear();
    let (sol, rep) = solve_eksm_separable(&d.op, &sep, &d.timeop, &opts(1e-8)).unwrap();
    assert!(rep.converged && sol.to_dense().amax() == 0.0);
}

#[test]
fn invalid_options_rejected() {
    let d = setup("example1", 16, 16, 1);
    let bad = SolverOptions { tol: 0.0, ..Default::default() };
    assert!(matches!(solve_eksm(&d.op, &d.rhs, &d.timeop, &bad), Err(SolveError::InvalidOptions(_))));
    let bad = SolverOptions { m_max: 0, ..Default::default() };
    assert!(matches!(solve_rksm(&d.op, &d.rhs, &d.timeop, &bad), Err(SolveError::InvalidOptions(_))));
}

#[test]
fn eksm_residual_formula_heat_2d() {
    let d = setup("example2", 16, 64, 1);
    let (gap, galerkin, iters) = residual_checks(&d, eksm, 1e-6);
    assert!(iters >= 3);
    assert!(gap <= 1e-6, "gap {gap:e}");
    assert!(galerkin <= 1e-8, "galerkin {galerkin:e}");
}

#[test]
fn eksm_residual_formula_heat_1d_bdf2() {
    let d = {
        use evosylv::discretization::presets::{preset, PresetParams};
        let mut spec = preset("custom", &PresetParams { n: 32, ell: 64, s: 2, d: 1, ..Default::default() }).unwrap();
        spec.u0 = evosylv::discretization::SpaceFn::general(|x| x[0] * (1.0 - x[0]) * (3.0 * x[0]).exp());
        spec.history = Some(std::sync::Arc::new(|x: &[f64], t: f64| x[0] * (1.0 - x[0]) * (3.0 * x[0] - t).exp()));
        evosylv::discretization::discretize(spec).unwrap()
    };
    let (gap, galerkin, iters) = residual_checks(&d, eksm, 1e-7);
    assert!(iters >= 2);
    assert!(gap <= 1e-6, "gap {gap:e}");
    assert!(galerkin <= 1e-8, "galerkin {galerkin:e}");
}

#[test]
fn boundary_corrected_residuals() {
    let d = setup_eps("example3", 16, 32, 0.1);
    for solve in [eksm as Observed, rksm] {
        let (gap, galerkin, _) = residual_checks(&d, solve, 1e-6);
        assert!(gap <= 1e-6, "gap {gap:e}");
        assert!(galerkin <= 1e-8, "galerkin {galerkin:e}");
    }
}

#[test]
fn rksm_residual_convection_1d() {
    let d = convection_1d(32, 64, 0.05);
    let (gap, galerkin, iters) = residual_checks(&d, rksm, 1e-7);
    assert!(iters >= 3);
    assert!(gap <= 1e-6, "gap {gap:e}");
    assert!(galerkin <= 1e-8, "galerkin {galerkin:e}");
}

#[test]
fn tensor_residuals_2d_and_3d() {
    for d in [setup("example2", 24, 32, 1), setup("example2_1", 12, 16, 1)] {
        let (gap, galerkin, iters) = residual_checks(&d, tensor, 1e-8);
        assert!(iters >= 2, "{}", d.spec.name);
        assert!(gap <= 1e-6, "{} gap {gap:e}", d.spec.name);
        assert!(galerkin <= 1e-8, "{} galerkin {galerkin:e}", d.spec.name);
    }
}

#[test]
fn solvers_match_timestepping() {
    for d in [setup("example2", 16, 64, 1), setup_eps("example3", 16, 64, 0.1), setup("example4", 8, 32, 1)] {
        let oracle = timestep_solve(&d.op, &d.rhs, &d.timeop).unwrap();
        for solve in [eksm as Observed, rksm] {
            let (sol, rep) = solve(&d, &opts(1e-10), &mut |_| {}).unwrap();
            assert!(rep.converged, "{}", d.spec.name);
            let err = relative_error(&sol.to_dense(), &oracle.u);
            assert!(err <= 1e-8, "{} {:?} error {err:e}", d.spec.name, rep.method);
        }
    }
}

#[test]
fn tensor_matches_full() {
    let d = setup("example2", 32, 128, 1);
    let (full, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-11)).unwrap();
    let (tens, rep) = solve_eksm_separable(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, &opts(1e-11)).unwrap();
    assert!(matches!(tens, FactoredSolution::Tensor { .. }));
    assert_eq!(rep.basis_dims.len(), 2);
    assert!(relative_error(&tens.to_dense(), &full.to_dense()) <= 1e-8);
}

#[test]
fn tensor_requires_structure() {
    let d = setup("example1", 16, 16, 1);
    let sep = d.rhs.separable.clone().unwrap();
    assert!(matches!(solve_eksm_separable(&d.op, &sep, &d.timeop, &opts(1e-8)), Err(SolveError::NotSeparable(_))));
    let d3 = setup_eps("example3", 8, 16, 1.0);
    assert!(d3.rhs.separable.is_none());
}

#[test]
fn inner_solvers_agree_inside_outer_loop() {
    let d = setup("example2", 16, 96, 1);
    let seq = SolverOptions { inner: InnerSolver::Sequential, ..opts(1e-10) };
    let (a, ra) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-10)).unwrap();
    let (b, rb) = solve_eksm(&d.op, &d.rhs, &d.timeop, &seq).unwrap();
    assert_eq!(ra.inner_solver, InnerSolver::FftSmw);
    assert_eq!(rb.inner_solver, InnerSolver::Sequential);
    assert_eq!(ra.iterations, rb.iterations);
    assert!(relative_error(&a.to_dense(), &b.to_dense()) <= 1e-10);
}

#[test]
fn oracles_agree_for_all_orders() {
    for s in 1..=6 {
        let d = setup("example1", 12, 40, s);
        let ts = timestep_solve(&d.op, &d.rhs, &d.timeop).unwrap();
        let dk = dense_kron_solve(&d.op, &d.rhs, &d.timeop).unwrap();
        assert!(relative_error(&dk.u, &ts.u) <= 1e-12, "s={s}");
    }
    let d = setup("example1", 8, 16, 1);
    let dk = dense_kron_solve(&d.op, &d.rhs, &d.timeop).unwrap();
    let (sol, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-10)).unwrap();
    assert!(relative_error(&sol.to_dense(), &dk.u) <= 1e-8);
}

#[test]
fn snapshot_extraction_matches_dense() {
    let d = setup("example2", 12, 20, 1);
    let (sol, _) = solve_eksm_separable(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, &opts(1e-10)).unwrap();
    let dense = sol.to_dense();
    for k in [1, 7, 20] {
        assert!((sol.extract_snapshot(k).unwrap() - dense.column(k - 1)).amax() < 1e-14);
    }
    assert!(matches!(sol.extract_snapshot(21), Err(SolveError::IndexOutOfRange { index: 21, len: 20 })));
}

#[test]
fn memory_units_follow_formulas() {
    let d = setup("example2", 16, 32, 1);
    let (_, r) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8)).unwrap();
    assert_eq!(r.memory_units, memory_eksm_full(r.iterations, d.rhs.rank(), 256, 32));
    let (_, r) = solve_rksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8)).unwrap();
    assert_eq!(r.memory_units, memory_rksm_full(r.iterations, d.rhs.rank(), 256, 32));
    let (_, r) = solve_eksm_separable(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, &opts(1e-8)).unwrap();
    assert_eq!(r.memory_units, memory_eksm_tensor(r.iterations, &[1, 1], 16, 32));
}

#[test]
fn example1_discretization_error_is_second_order_in_space() {
    // ℓ large enough that τ does not dominate
    let errs: Vec<f64> = [17, 33].iter().map(|&n| {
        let d = setup("example1", n, 4096, 2);
        let (sol, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-10)).unwrap();
        let u = sol.extract_snapshot(sol.num_steps()).unwrap();
        let nodes = d.spec.grid.nodes(0);
        let exact: Vec<f64> = nodes.iter().map(|&x| evosylv::oracles::analytic_example1(x, 1.0)).collect();
        let exact = nalgebra::DVector::from_vec(exact);
        (u - &exact).norm() / exact.norm()
    }).collect();
    let ratio = errs[0] / errs[1];
    assert!(ratio > 3.5 && ratio < 4.5, "{errs:?}");
}
