//! Finite-difference discretization: grids, boundary-modified operators,
//! factored right-hand sides and the preset problems.

mod functions;
mod grid;
mod operator;
pub mod presets;
mod problem;
mod rhs;
mod stencil;

pub use functions::{fn1, Fn1, FnX, FnXt, SpaceFn, SpaceTime, Term, TimeFn};
pub use grid::Grid;
pub use operator::{
    assemble_space_operator, convection_diffusion_interior, kron_chain, kron_sum, steady_convection_diffusion, SpaceOperator,
};
pub use problem::{PdeKind, ProblemSpec, Wind};
pub use rhs::{
    assemble_rhs, assemble_rhs_with, boundary_values, compress_snapshots, recompress, LowRankRhs, RhsOptions, SeparableRhs,
    SeparableTerm,
};
pub use stencil::{first_derivative_1d, laplacian_1d, modify_for_boundary, nodal_diag};

use thiserror::Error;

use crate::kernels::KernelError;
use crate::timeops::{build_time_operator, TimeOpError, TimeOperator};

/// Everything a solver needs for one problem.
#[derive(Debug)]
pub struct Discretized {
    pub spec: ProblemSpec,
    pub op: SpaceOperator,
    pub rhs: LowRankRhs,
    pub timeop: TimeOperator,
}

pub fn discretize(spec: ProblemSpec) -> Result<Discretized, DiscretizationError> {
    discretize_with(spec, RhsOptions::default())
}

pub fn discretize_with(spec: ProblemSpec, opts: RhsOptions) -> Result<Discretized, DiscretizationError> {
    let op = assemble_space_operator(&spec)?;
    let rhs = assemble_rhs_with(&spec, &op, opts)?;
    let timeop = build_time_operator(spec.grid.ell, spec.s, spec.grid.tau())?;
    Ok(Discretized { spec, op, rhs, timeop })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("unsupported space dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("wind is not separable: {0}")]
    NonSeparableWind(String),
    #[error("BDF{s} needs {} extra starting values and none were provided", s - 1)]
    MissingInitialValues { s: usize },
    #[error("invalid grid or problem data: {0}")]
    InvalidGrid(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Time(#[from] TimeOpError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
