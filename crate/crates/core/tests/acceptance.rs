//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//! Run with `cargo test --release -p evosylv --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use evosylv::discretization::{discretize, fn1, Discretized, Grid, PdeKind, ProblemSpec, SpaceFn, Wind};
use evosylv::oracles::{analytic_example1_grid, relative_error, timestep_solve};
use evosylv::solver::*;
use evosylv::timeops::{build_time_operator, TimeOperator};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn opts(tol: f64, m_max: usize) -> SolverOptions {
    SolverOptions { tol, m_max, ..Default::default() }
}

fn random_problem<'a>(rng: &mut StdRng, t: &'a TimeOperator, r: usize, skew: f64) -> ProjectedProblem<'a> {
    // 𝓘 + τβ T with T symmetric positive definite plus a small skew part,
    // as produced by the outer iterations
    let b = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    let k = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    let spread: f64 = rng.gen_range(1.0..1e3);
    let t_small = DMatrix::identity(r, r) + &b * b.transpose() * (spread / r as f64) + (&k - k.transpose()) * skew;
    let q = rng.gen_range(1..=3);
    ProjectedProblem {
        a_small: ProjectedMatrix::Dense(DMatrix::identity(r, r) + t_small * t.tau_beta()),
        rhs_left: DMatrix::from_fn(r, q, |_, _| rng.gen_range(-1.0..1.0)),
        rhs_right: DMatrix::from_fn(t.dim(), q, |i, j| if j == 0 { (i < t.s) as u8 as f64 } else { 0.1 * rng.gen_range(-1.0..1.0) }),
        timeop: t,
    }
}

fn inner_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let l = [17, 64, 100, 256][case % 4];
        let s = 1 + (case / 4) % 6;
        let r = rng.gen_range(1..=20);
        let skew = if case % 2 == 0 { 0.0 } else { rng.gen_range(0.0..2.0) };
        let t = build_time_operator(l + s - 1, s, 1.0 / l as f64).unwrap();
        let p = random_problem(&mut rng, &t, r, skew);
        let y_seq = inner_solve_sequential(&p).map_err(|e| format!("case {case}: sequential {e}"))?;
        let y_fft = inner_solve_fft_smw(&p).map_err(|e| format!("case {case}: fft {e}"))?;
        worst = worst.max((&y_fft - &y_seq).norm() / y_seq.norm());
    }
    ensure(worst <= 1e-10, format!("200 problems, max relative difference {worst:.2e}"))
}

fn smw_structure() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for s in 1..=6 {
        for l in [8, 17, 32] {
            let r = rng.gen_range(1..=8);
            let t = build_time_operator(l + s - 1, s, 1.0 / l as f64).unwrap();
            let p = random_problem(&mut rng, &t, r, 0.3);
            let dense = smw_core_dense(&p).map_err(|e| e.to_string())?;
            let structured = smw_core_structured(&p).map_err(|e| e.to_string())?;
            worst = worst.max((&dense - &structured).camax() / dense.camax().max(1.0));
        }
    }
    ensure(worst <= 1e-12, format!("s = 1..6, max difference {worst:.2e}"))
}

fn heat_1d(n: usize, ell: usize) -> Discretized {
    let grid = Grid::cube(1, n, (0.0, 1.0), 1.0, ell).unwrap();
    discretize(ProblemSpec::heat("heat1d", grid, SpaceFn::Product(vec![fn1(|x| x * (1.0 - x) * (3.0 * x).exp())]))).unwrap()
}

fn convection_1d_homogeneous(n: usize, ell: usize) -> Discretized {
    let grid = Grid::cube(1, n, (0.0, 1.0), 1.0, ell).unwrap();
    let mut spec = ProblemSpec::heat("cd1", grid, SpaceFn::Product(vec![fn1(|x| x * (1.0 - x) * (3.0 * x).exp())]));
    spec.kind = PdeKind::ConvectionDiffusion { epsilon: 0.05, wind: Wind::aligned(vec![fn1(|x| 1.0 + x)]) };
    discretize(spec).unwrap()
}

/// Largest `|cheap - explicit| / explicit` and `‖V^T R‖ / δ` over all iterations.
fn track(d: &Discretized, method: Method, o: &SolverOptions) -> Result<(f64, f64, usize), String> {
    let mut gap: f64 = 0.0;
    let mut galerkin: f64 = 0.0;
    let mut obs = |st: &IterationState| {
        let r = explicit_residual(d, &st.solution.to_dense());
        gap = gap.max((st.residual - r.norm()).abs() / r.norm());
        galerkin = galerkin.max(projected_residual(st.solution, &r).norm() / st.delta);
    };
    let res = match method {
        Method::Eksm => solve_eksm_observed(&d.op, &d.rhs, &d.timeop, o, &mut obs),
        Method::Rksm => solve_rksm_observed(&d.op, &d.rhs, &d.timeop, o, &mut obs),
        Method::EksmTensor => solve_eksm_separable_observed(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, o, &mut obs),
    };
    let (_, report) = res.map_err(|e| e.to_string())?;
    Ok((gap, galerkin, report.iterations))
}

fn residual_formulas() -> Check {
    let cases = [
        ("1D heat, EKSM", heat_1d(32, 64), Method::Eksm, 1e-6),
        ("2D heat, EKSM", setup("example2", 16, 64, 1), Method::Eksm, 1e-6),
        ("2D heat, tensor EKSM", setup("example2", 32, 64, 1), Method::EksmTensor, 1e-6),
        ("1D convection-diffusion, RKSM", convection_1d_homogeneous(32, 64), Method::Rksm, 1e-6),
    ];
    let mut out = Vec::new();
    let mut ok = true;
    for (name, d, m, tol) in &cases {
        let (gap, _, iters) = track(d, *m, &opts(*tol, 40))?;
        ok &= gap <= 1e-8;
        out.push(format!("{name}: {gap:.1e} over {iters} its"));
    }
    ensure(ok, out.join("; "))
}

fn oracle_example1() -> Check {
    let d = setup("example1", 256, 1024, 1);
    let ts = timestep_solve(&d.op, &d.rhs, &d.timeop).map_err(|e| e.to_string())?;
    let (e, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-10, 60)).map_err(|e| e.to_string())?;
    let (r, _) = solve_rksm(&d.op, &d.rhs, &d.timeop, &opts(1e-10, 60)).map_err(|e| e.to_string())?;
    let (ee, er) = (relative_error(&e.to_dense(), &ts.u), relative_error(&r.to_dense(), &ts.u));
    ensure(ee <= 1e-8 && er <= 1e-8, format!("EKSM {ee:.2e}, RKSM {er:.2e}"))
}

fn example1_error(n: usize, ell: usize, s: usize) -> Result<f64, String> {
    let d = setup("example1", n, ell, s);
    let (sol, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-12, 60)).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..d.timeop.dim()).map(|k| d.spec.grid.time(s + k)).collect();
    let exact = analytic_example1_grid(&d.spec.grid.nodes(0), &times);
    Ok(relative_error(&sol.to_dense(), &exact.u))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

fn convergence_orders() -> Check {
    let ns = [33, 65, 129, 257];
    let hs: Vec<f64> = ns.iter().map(|&n| PI / (n - 1) as f64).collect();
    let errs = ns.iter().map(|&n| example1_error(n, 4096, 2)).collect::<Result<Vec<_>, _>>()?;
    let space = slope(&hs, &errs);
    let mut ok = (1.85..=2.15).contains(&space);
    let mut msg = vec![format!("space {space:.3}")];
    for (s, ells) in [(1, [16, 32, 64, 128]), (2, [16, 32, 64, 128]), (3, [8, 16, 32, 64])] {
        let taus: Vec<f64> = ells.iter().map(|&l| 1.0 / l as f64).collect();
        let errs = ells.iter().map(|&l| example1_error(8193, l, s)).collect::<Result<Vec<_>, _>>()?;
        let k = slope(&taus, &errs);
        ok &= (k - s as f64).abs() <= 0.15;
        msg.push(format!("time s={s} {k:.3}"));
    }
    ensure(ok, msg.join(", "))
}

fn robustness_in_ell() -> Check {
    let mut its = Vec::new();
    for ell in [256, 1024, 4096] {
        let d = setup("example2", 64, ell, 1);
        let (_, rep) = solve_eksm_separable(&d.op, d.rhs.separable.as_ref().unwrap(), &d.timeop, &opts(1e-8, 60)).map_err(|e| e.to_string())?;
        if !rep.converged {
            return Err(format!("ℓ = {ell} did not converge"));
        }
        its.push(rep.iterations);
    }
    let spread = its.iter().max().unwrap() - its.iter().min().unwrap();
    ensure(spread <= 2, format!("iterations {its:?} for ℓ = 256, 1024, 4096"))
}

fn tensor_consistency() -> Check {
    let d = setup("example2", 32, 256, 1);
    let (full, _) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-11, 60)).map_err(|e| e.to_string())?;
    let sep = d.rhs.separable.as_ref().unwrap();
    let (tens, _) = solve_eksm_separable(&d.op, sep, &d.timeop, &opts(1e-11, 60)).map_err(|e| e.to_string())?;
    let e2 = relative_error(&tens.to_dense(), &full.to_dense());
    let d3 = setup("example2_1", 8, 64, 1);
    let ts = timestep_solve(&d3.op, &d3.rhs, &d3.timeop).map_err(|e| e.to_string())?;
    let (t3, _) = solve_eksm_separable(&d3.op, d3.rhs.separable.as_ref().unwrap(), &d3.timeop, &opts(1e-10, 60)).map_err(|e| e.to_string())?;
    let e3 = relative_error(&t3.to_dense(), &ts.u);
    ensure(e2 <= 1e-8 && e3 <= 1e-7, format!("2D tensor vs full {e2:.2e}, 3D tensor vs timestep {e3:.2e}"))
}

fn convection_diffusion() -> Check {
    let mut ok = true;
    let mut msg = Vec::new();
    for eps in [1.0, 0.1, 0.01] {
        let d = setup_eps("example3", 64, 256, eps);
        let ts = timestep_solve(&d.op, &d.rhs, &d.timeop).map_err(|e| e.to_string())?;
        let (e, re) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-6, 60)).map_err(|e| e.to_string())?;
        let (r, rr) = solve_rksm(&d.op, &d.rhs, &d.timeop, &opts(1e-6, 60)).map_err(|e| e.to_string())?;
        let (ee, er) = (relative_error(&e.to_dense(), &ts.u), relative_error(&r.to_dense(), &ts.u));
        ok &= re.converged && rr.converged && ee <= 1e-5 && er <= 1e-5;
        msg.push(format!("ε={eps}: EKSM {} its {ee:.1e}, RKSM {} its {er:.1e}", re.iterations, rr.iterations));
    }
    ensure(ok, msg.join("; "))
}

fn memory_accounting() -> Check {
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, n, ell) in [("example2", 16, 32), ("example3", 16, 32), ("example2_1", 8, 16)] {
        let d = setup(name, n, ell, 1);
        let nd = d.op.dim() as u64;
        let (q, l) = (d.rhs.rank() as u64, d.timeop.dim() as u64);
        let (_, e) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8, 60)).map_err(|e| e.to_string())?;
        let (_, r) = solve_rksm(&d.op, &d.rhs, &d.timeop, &opts(1e-8, 60)).map_err(|e| e.to_string())?;
        let me = 2 * (e.iterations as u64 + 1) * q * (nd + l);
        let mr = (r.iterations as u64 + 1) * q * (nd + l);
        ok &= e.memory_units == me && r.memory_units == mr;
        msg.push(format!("{name} full {}/{}", e.memory_units, r.memory_units));
        if let Some(sep) = &d.rhs.separable {
            let (_, t) = solve_eksm_separable(&d.op, sep, &d.timeop, &opts(1e-8, 60)).map_err(|e| e.to_string())?;
            let (m1, dd) = (t.iterations as u64 + 1, d.op.d as u32);
            let p = sep.terms.len() as u64;
            let mt = 2 * m1 * (dd as u64 * p) * d.op.n as u64 + 2u64.pow(dd) * m1.pow(dd) * p.pow(dd) * l;
            ok &= t.memory_units == mt;
            msg.push(format!("{name} tensor {}", t.memory_units));
        }
    }
    ensure(ok, msg.join(", "))
}

fn galerkin() -> Check {
    let cases = [
        ("1D heat", heat_1d(32, 64), Method::Eksm),
        ("2D heat", setup("example2", 16, 64, 1), Method::Rksm),
        ("2D tensor", setup("example2", 32, 64, 1), Method::EksmTensor),
        ("1D convection", convection_1d(32, 64, 0.05), Method::Rksm),
        ("example3 EKSM", setup_eps("example3", 16, 32, 0.1), Method::Eksm),
        ("example3 RKSM", setup_eps("example3", 16, 32, 0.1), Method::Rksm),
    ];
    let mut worst: f64 = 0.0;
    for (name, d, m) in &cases {
        let (_, g, _) = track(d, *m, &opts(1e-7, 40)).map_err(|e| format!("{name}: {e}"))?;
        worst = worst.max(g);
    }
    ensure(worst <= 1e-8, format!("{} problems, max ‖V^T R‖ / ‖RHS‖ {worst:.2e}", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("inner solver equivalence", inner_equivalence),
        ("SMW structure", smw_structure),
        ("residual formulas", residual_formulas),
        ("oracle equivalence on example1", oracle_example1),
        ("convergence orders", convergence_orders),
        ("iterations robust in ℓ", robustness_in_ell),
        ("tensorized vs full", tensor_consistency),
        ("convection-diffusion", convection_diffusion),
        ("memory accounting", memory_accounting),
        ("Galerkin property", galerkin),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS {:>2} {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
