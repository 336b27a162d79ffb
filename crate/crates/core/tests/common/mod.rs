#![allow(dead_code)]

use evosylv::discretization::presets::{preset, PresetParams};
use evosylv::discretization::{discretize, fn1, Discretized, Grid, PdeKind, ProblemSpec, SpaceFn, Term, Wind};
use evosylv::kernels::SparseMatrix;
use evosylv::solver::FactoredSolution;
use nalgebra::DMatrix;

pub fn setup(name: &str, n: usize, ell: usize, s: usize) -> Discretized {
    discretize(preset(name, &PresetParams { n, ell, s, ..Default::default() }).unwrap()).unwrap()
}

pub fn setup_eps(name: &str, n: usize, ell: usize, epsilon: f64) -> Discretized {
    discretize(preset(name, &PresetParams { n, ell, epsilon, ..Default::default() }).unwrap()).unwrap()
}

/// 1D convection-diffusion with wind `1 + x`, `u_0 = sin(πx)` and `u(0, t) = 1`.
pub fn convection_1d(n: usize, ell: usize, epsilon: f64) -> Discretized {
    let grid = Grid::cube(1, n, (0.0, 1.0), 1.0, ell).unwrap();
    let mut spec = ProblemSpec::heat("cd1", grid, SpaceFn::Product(vec![fn1(|x| (std::f64::consts::PI * x).sin())]));
    spec.kind = PdeKind::ConvectionDiffusion { epsilon, wind: Wind::aligned(vec![fn1(|x| 1.0 + x)]) };
    spec.boundary = vec![Term::constant_in_time(SpaceFn::general(|x| if x[0] == 0.0 { 1.0 } else { 0.0 }))];
    discretize(spec).unwrap()
}

/// `A U - U Σ^T - rhs` with everything assembled.
pub fn explicit_residual(d: &Discretized, u: &DMatrix<f64>) -> DMatrix<f64> {
    let a: SparseMatrix = d.op.step_matrix();
    a.spmv(u) - u * d.timeop.sigma().transpose() - d.rhs.to_dense()
}

/// `V^T R` for the full layout, `(Q_d ⊗ .. ⊗ Q_1)^T R` for the tensor one.
pub fn projected_residual(sol: &FactoredSolution, r: &DMatrix<f64>) -> DMatrix<f64> {
    match sol {
        FactoredSolution::Full { v, .. } => v.transpose() * r,
        FactoredSolution::Tensor { bases, .. } => {
            let t: Vec<DMatrix<f64>> = bases.iter().map(|b| b.transpose()).collect();
            evosylv::kernels::kron_apply(r, &t.iter().collect::<Vec<_>>())
        }
    }
}
