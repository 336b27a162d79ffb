//! Named benchmark problems.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use super::functions::{fn1, SpaceFn, SpaceTime, Term};
use super::operator::steady_convection_diffusion;
use super::problem::{PdeKind, ProblemSpec, Wind};
use super::{DiscretizationError, Grid};
use crate::kernels::BandedLu;

pub const PRESET_NAMES: [&str; 6] = ["example1", "example2", "example2_1", "example3", "example4", "custom"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetParams {
    pub n: usize,
    pub ell: usize,
    pub s: usize,
    /// Viscosity for the convection-diffusion presets.
    pub epsilon: f64,
    /// Space dimension, only read by `custom`.
    pub d: usize,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self { n: 64, ell: 256, s: 1, epsilon: 1.0, d: 2 }
    }
}

/// Space dimension of a preset.
pub fn preset_dimension(name: &str, params: &PresetParams) -> Result<usize, DiscretizationError> {
    Ok(match name {
        "example1" => 1,
        "example2" | "example3" => 2,
        "example2_1" | "example4" => 3,
        "custom" => params.d,
        other => return Err(DiscretizationError::UnknownPreset(other.to_string())),
    })
}

pub fn preset(name: &str, p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let mut spec = match name {
        "example1" => example1(p)?,
        "example2" => example2(p)?,
        "example2_1" => example2_1(p)?,
        "example3" => example3(p)?,
        "example4" => example4(p)?,
        "custom" => custom(p)?,
        other => return Err(DiscretizationError::UnknownPreset(other.to_string())),
    };
    spec.s = p.s;
    spec.validate()?;
    Ok(spec)
}

/// `u_t = u_xx` on `(0, π)`, `u_0 = sin x`, zero boundary data, solution `sin(x) e^{-t}`.
pub fn example1(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let grid = Grid::cube(1, p.n, (0.0, PI), 1.0, p.ell)?;
    let mut spec = ProblemSpec::heat("example1", grid, SpaceFn::Product(vec![fn1(f64::sin)]));
    spec.exact = Some(Arc::new(|x: &[f64], t: f64| x[0].sin() * (-t).exp()));
    Ok(spec)
}

/// 2D heat on the unit square with `u_0 = x(x-1)y(y-1)`.
pub fn example2(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let grid = Grid::cube(2, p.n, (0.0, 1.0), 1.0, p.ell)?;
    let q = fn1(|x| x * (x - 1.0));
    Ok(ProblemSpec::heat("example2", grid, SpaceFn::Product(vec![q.clone(), q])))
}

/// 3D heat on `(-1, 1)^3`, `T = 2`, zero initial and boundary data and
/// source `(1 + sin(πt/2)) Π (1 - x_i^2) e^{x_i}`.
pub fn example2_1(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let grid = Grid::cube(3, p.n, (-1.0, 1.0), 2.0, p.ell)?;
    let bump = fn1(|x| (1.0 - x * x) * x.exp());
    let mut spec = ProblemSpec::heat("example2_1", grid, SpaceFn::Zero);
    spec.source = SpaceTime::Terms(vec![Term::new(
        SpaceFn::Product(vec![bump.clone(), bump.clone(), bump]),
        |t| 1.0 + (PI * t / 2.0).sin(),
    )]);
    Ok(spec)
}

/// Recirculating wind `(2y(1-x^2), -2x(1-y^2))` on the unit square, hot
/// left wall `g(0, y) = 1` (corners included), zero elsewhere.
pub fn example3(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let grid = Grid::cube(2, p.n, (0.0, 1.0), 1.0, p.ell)?;
    let wind = Wind::separable(vec![
        vec![fn1(|x| 1.0 - x * x), fn1(|y| 2.0 * y)],
        vec![fn1(|x| -2.0 * x), fn1(|y| 1.0 - y * y)],
    ]);
    let mut spec = ProblemSpec::heat("example3", grid, SpaceFn::Zero);
    spec.kind = PdeKind::ConvectionDiffusion { epsilon: p.epsilon, wind };
    spec.boundary = vec![Term::constant_in_time(SpaceFn::general(|x| if x[0] == 0.0 { 1.0 } else { 0.0 }))];
    Ok(spec)
}

pub fn example4_wind() -> Wind {
    Wind::aligned(vec![fn1(|x| x * x.sin()), fn1(|y| y * y.cos()), fn1(|z| (z * z - 1.0).exp())])
}

/// 3D convection-diffusion with wind `(x sin x, y cos y, e^{z^2-1})`; `u_0`
/// is the discrete solution of `-Δg + w·∇g = 1`, `g = 0` on the boundary.
pub fn example4(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let grid = Grid::cube(3, p.n, (0.0, 1.0), 1.0, p.ell)?;
    let wind = example4_wind();
    let u0 = steady_state(&grid, 1.0, &wind)?;
    let mut spec = ProblemSpec::heat("example4", grid, SpaceFn::Nodal(Arc::new(u0)));
    spec.kind = PdeKind::ConvectionDiffusion { epsilon: p.epsilon, wind };
    Ok(spec)
}

/// Solves `-εΔg + w·∇g = 1` with homogeneous Dirichlet data.
pub fn steady_state(grid: &Grid, epsilon: f64, wind: &Wind) -> Result<DVector<f64>, DiscretizationError> {
    let k = steady_convection_diffusion(grid, epsilon, wind);
    let mut b = vec![1.0; grid.num_nodes()];
    grid.boundary_indices().into_iter().for_each(|j| b[j] = 0.0);
    let lu = BandedLu::factor(&k, 0.0)?;
    Ok(DVector::from_vec(lu.solve_vec(&b)))
}

/// Heat on `(0, 1)^d` with `u_0 = Π sin(π x_i)`; solution `e^{-dπ^2 t} u_0`.
pub fn custom(p: &PresetParams) -> Result<ProblemSpec, DiscretizationError> {
    let d = p.d;
    let grid = Grid::cube(d, p.n, (0.0, 1.0), 1.0, p.ell)?;
    let mut spec = ProblemSpec::heat("custom", grid, SpaceFn::Product(vec![fn1(|x| (PI * x).sin()); d]));
    spec.exact = Some(Arc::new(move |x: &[f64], t: f64| {
        (-(d as f64) * PI * PI * t).exp() * x.iter().map(|&v| (PI * v).sin()).product::<f64>()
    }));
    Ok(spec)
}
