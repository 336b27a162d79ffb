use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::problem::{PdeKind, ProblemSpec, Wind};
use super::stencil::{first_derivative_1d, laplacian_1d, modify_for_boundary, nodal_diag};
use super::{DiscretizationError, Grid};
use crate::kernels::{BandedLu, KernelError, SparseMatrix};
use crate::timeops::bdf_coefficients;

/// Boundary-modified space operator `K̄_d`.
///
/// Boundary rows are scaled so that `(I - P) + τβ K̄` reproduces the
/// Dirichlet data. Kronecker-sum operators keep their 1D factors, which is
/// what the tensorized solver works with.
#[derive(Debug)]
pub struct SpaceOperator {
    pub d: usize,
    pub n: usize,
    pub tau_beta: f64,
    factors: Option<Vec<SparseMatrix>>,
    assembled: OnceLock<SparseMatrix>,
    boundary: Vec<usize>,
    lu: OnceLock<Result<BandedLu, KernelError>>,
}

impl SpaceOperator {
    /// `Σ_k I ⊗ .. ⊗ F_k ⊗ .. ⊗ I`, `factors[0]` acting on `x`.
    pub fn from_factors(grid: &Grid, factors: Vec<SparseMatrix>, tau_beta: f64) -> Self {
        Self {
            d: grid.d,
            n: grid.n,
            tau_beta,
            factors: Some(factors),
            assembled: OnceLock::new(),
            boundary: grid.boundary_indices(),
            lu: OnceLock::new(),
        }
    }

    pub fn from_assembled(grid: &Grid, k: SparseMatrix, tau_beta: f64) -> Self {
        Self {
            d: grid.d,
            n: grid.n,
            tau_beta,
            factors: None,
            assembled: OnceLock::from(k),
            boundary: grid.boundary_indices(),
            lu: OnceLock::new(),
        }
    }

    /// An arbitrary square `K` with explicit boundary rows, treated as one
    /// direction of size `k.nrows()`.
    pub fn from_matrix(k: SparseMatrix, boundary: Vec<usize>, tau_beta: f64) -> Self {
        Self {
            d: 1,
            n: k.nrows(),
            tau_beta,
            factors: None,
            assembled: OnceLock::from(k),
            boundary,
            lu: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// 1D factors of a Kronecker-sum operator, `x` first.
    pub fn factors(&self) -> Option<&[SparseMatrix]> {
        self.factors.as_deref()
    }

    pub fn assembled(&self) -> &SparseMatrix {
        self.assembled.get_or_init(|| kron_sum(self.factors.as_ref().expect("operator has neither factors nor assembly")))
    }

    pub fn boundary_indices(&self) -> &[usize] {
        &self.boundary
    }

    /// Diagonal of `I - P`: one on interior nodes, zero on the boundary.
    pub fn interior_mask(&self) -> Vec<f64> {
        let mut m = vec![1.0; self.dim()];
        self.boundary.iter().for_each(|&i| m[i] = 0.0);
        m
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.assembled().spmv(x)
    }

    /// Cached factorization of `K̄`.
    pub fn lu(&self) -> Result<&BandedLu, KernelError> {
        self.lu.get_or_init(|| BandedLu::factor(self.assembled(), 0.0)).as_ref().map_err(Clone::clone)
    }

    /// `(I - P) + τβ K̄`, the spatial block of the all-at-once system.
    pub fn step_matrix(&self) -> SparseMatrix {
        let interior = SparseMatrix::from_diagonal(&self.interior_mask());
        interior.add_scaled(1.0, self.assembled(), self.tau_beta)
    }
}

/// Kronecker sum of 1D factors with `factors[0]` the fastest index.
pub fn kron_sum(factors: &[SparseMatrix]) -> SparseMatrix {
    let d = factors.len();
    let mut total: Option<SparseMatrix> = None;
    for (k, f) in factors.iter().enumerate() {
        let inner = SparseMatrix::identity(factors[..k].iter().map(|m| m.nrows()).product());
        let outer = SparseMatrix::identity(factors[k + 1..d].iter().map(|m| m.nrows()).product());
        let term = SparseMatrix::kron(&outer, &SparseMatrix::kron(f, &inner));
        total = Some(match total {
            None => term,
            Some(t) => t.add_scaled(1.0, &term, 1.0),
        });
    }
    total.expect("at least one factor")
}

/// `⊗_k M_k` with `mats[0]` acting on `x` (innermost).
pub fn kron_chain(mats: &[SparseMatrix]) -> SparseMatrix {
    let mut it = mats.iter().rev();
    let first = it.next().expect("at least one factor").clone();
    it.fold(first, |acc, m| SparseMatrix::kron(&acc, m))
}

/// Unmodified `-εΔ + w·∇` on every node (boundary rows are meaningless).
pub fn convection_diffusion_interior(grid: &Grid, epsilon: f64, wind: &Wind) -> SparseMatrix {
    let d = grid.d;
    let n = grid.n;
    let id = SparseMatrix::identity(n);
    let mut total: Option<SparseMatrix> = None;
    let mut push = |m: SparseMatrix| {
        total = Some(match total.take() {
            None => m,
            Some(t) => t.add_scaled(1.0, &m, 1.0),
        })
    };
    for k in 0..d {
        let mats: Vec<_> = (0..d).map(|j| if j == k { laplacian_1d(n, grid.h(j)).scale(epsilon) } else { id.clone() }).collect();
        push(kron_chain(&mats));
    }
    for (i, comp) in wind.components.iter().enumerate() {
        let mats: Vec<_> = (0..d)
            .map(|k| {
                let diag = nodal_diag(&*comp[k], &grid.nodes(k));
                if k == i {
                    diag.mul(&first_derivative_1d(n, grid.h(k)))
                } else {
                    diag
                }
            })
            .collect();
        push(kron_chain(&mats));
    }
    total.expect("d >= 1")
}

/// `-εΔg + w·∇g = rhs` with identity rows on the boundary.
pub fn steady_convection_diffusion(grid: &Grid, epsilon: f64, wind: &Wind) -> SparseMatrix {
    convection_diffusion_interior(grid, epsilon, wind).with_identity_rows(&grid.boundary_indices(), 1.0)
}

pub fn assemble_space_operator(spec: &ProblemSpec) -> Result<SpaceOperator, DiscretizationError> {
    spec.validate()?;
    let (beta, _) = bdf_coefficients(spec.s)?;
    let grid = &spec.grid;
    let tau_beta = grid.tau() * beta;
    let n = grid.n;
    Ok(match &spec.kind {
        PdeKind::Heat => {
            let factors = (0..grid.d).map(|k| modify_for_boundary(&laplacian_1d(n, grid.h(k)), tau_beta)).collect();
            SpaceOperator::from_factors(grid, factors, tau_beta)
        }
        PdeKind::ConvectionDiffusion { epsilon, wind } if wind.aligned => {
            let factors = (0..grid.d)
                .map(|k| {
                    let conv = nodal_diag(&*wind.components[k][k], &grid.nodes(k)).mul(&first_derivative_1d(n, grid.h(k)));
                    let f = laplacian_1d(n, grid.h(k)).add_scaled(*epsilon, &conv, 1.0);
                    modify_for_boundary(&f, tau_beta)
                })
                .collect();
            SpaceOperator::from_factors(grid, factors, tau_beta)
        }
        PdeKind::ConvectionDiffusion { epsilon, wind } => {
            let k = convection_diffusion_interior(grid, *epsilon, wind).with_identity_rows(&grid.boundary_indices(), 1.0 / tau_beta);
            SpaceOperator::from_assembled(grid, k, tau_beta)
        }
    })
}
