use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::KrylovError;
use crate::kernels::{BandedLu, SparseMatrix};

/// An operator `K` with its boundary index set, as seen by the Arnoldi
/// processes. Works for the assembled `K̄_d` and for a single 1D factor.
#[derive(Debug)]
pub struct KrylovOperator<'a> {
    k: &'a SparseMatrix,
    kt: SparseMatrix,
    boundary: Vec<usize>,
    lu: OnceLock<Result<BandedLu, KrylovError>>,
}

impl<'a> KrylovOperator<'a> {
    pub fn new(k: &'a SparseMatrix, boundary: Vec<usize>) -> Self {
        Self { k, kt: k.transpose(), boundary, lu: OnceLock::new() }
    }

    /// Reuses an existing factorization of `K`.
    pub fn with_lu(k: &'a SparseMatrix, boundary: Vec<usize>, lu: BandedLu) -> Self {
        Self { k, kt: k.transpose(), boundary, lu: OnceLock::from(Ok(lu)) }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.k.spmv(x)
    }


    pub fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.kt.spmv(x)
    }

    pub fn solve(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, KrylovError> {
        let lu = self
            .lu
            .get_or_init(|| BandedLu::factor(self.k, 0.0).map_err(KrylovError::SingularOperator))
            .as_ref()
            .map_err(Clone::clone)?;
        Ok(lu.solve(x))
    }

    pub fn boundary_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.boundary.len(), x.ncols(), |i, j| x[(self.boundary[i], j)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Extended,
    Rational,
}

/// Block Krylov basis `V = [𝓥_1, .., 𝓥_k]` with the explicit projections
/// `T = V^T K V` and `𝓘 = V^T (I - P) V` over all stored blocks.
///
/// The solvers project onto all blocks but the last one; the last block
/// only enters through the coupling rows of `T`.
#[derive(Clone, Debug)]
pub struct KrylovBasis {
    pub kind: BasisKind,
    pub v: DMatrix<f64>,
    widths: Vec<usize>,
    /// `V^T K V` over all blocks.
    pub t_full: DMatrix<f64>,
    /// `V^T (I - P) V = I - B^T B`, `B` the boundary rows of `V`.
    pub i_full: DMatrix<f64>,
    pub boundary_rows: DMatrix<f64>,
    /// `K 𝓥_k` for the last block.
    pub(crate) k_last: DMatrix<f64>,
    /// Extended: widths of the `K`-half and the `K^{-1}`-half of the last block.
    pub(crate) halves: (usize, usize),
    /// Coefficients of the starting block: `B = 𝓥_1 γ`.
    pub gamma: DMatrix<f64>,
    /// Rational: `H̲`, rows over all blocks, columns over all but the last.
    pub h_full: DMatrix<f64>,
    /// Rational: poles `ξ_2, ξ_3, ..` used to build blocks `2, 3, ..`.
    pub shifts: Vec<f64>,
}

impl KrylovBasis {
    pub(crate) fn new(kind: BasisKind, n: usize, n_boundary: usize, gamma: DMatrix<f64>) -> Self {
        Self {
            kind,
            v: DMatrix::zeros(n, 0),
            widths: Vec::new(),
            t_full: DMatrix::zeros(0, 0),
            i_full: DMatrix::zeros(0, 0),
            boundary_rows: DMatrix::zeros(n_boundary, 0),
            k_last: DMatrix::zeros(n, 0),
            halves: (0, 0),
            gamma,
            h_full: DMatrix::zeros(0, 0),
            shifts: Vec::new(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.widths.len()
    }

    pub fn block_widths(&self) -> &[usize] {
        &self.widths
    }

    /// Columns of block `j` (0-based).
    pub fn block_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.widths[..j].iter().sum();
        start..start + self.widths[j]
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn block(&self, j: usize) -> DMatrix<f64> {
        let r = self.block_range(j);
        self.v.columns(r.start, r.len()).into_owned()
    }

    pub fn last_block(&self) -> DMatrix<f64> {
        self.block(self.num_blocks() - 1)
    }

    /// Appends an orthonormal block and updates `T`, `𝓘` and the boundary rows.
    pub(crate) fn push_block(&mut self, op: &KrylovOperator, w: DMatrix<f64>) {
        let r = self.dim();
        let k = w.ncols();
        let kw = op.apply(&w);
        let ktw = op.apply_transpose(&w);
        let bw = op.boundary_rows(&w);

        let mut v = std::mem::replace(&mut self.v, DMatrix::zeros(0, 0)).resize_horizontally(r + k, 0.0);
        v.columns_mut(r, k).copy_from(&w);
        self.v = v;

        let mut t = std::mem::replace(&mut self.t_full, DMatrix::zeros(0, 0)).resize(r + k, r + k, 0.0);
        let col = self.v.transpose() * &kw;
        t.columns_mut(r, k).copy_from(&col);
        if r > 0 {
            let row = ktw.transpose() * self.v.columns(0, r);
            t.view_mut((r, 0), (k, r)).copy_from(&row);
        }
        self.t_full = t;

        // interior rows directly rather than I - B^T B, which cancels
        let mut w_int = w.clone();
        for &j in op.boundary() {
            w_int.row_mut(j).fill(0.0);
        }
        let mut i = std::mem::replace(&mut self.i_full, DMatrix::zeros(0, 0)).resize(r + k, r + k, 0.0);
        let cross = self.v.columns(0, r).transpose() * &w_int;
        let diag = w_int.transpose() * &w_int;
        i.view_mut((0, r), (r, k)).copy_from(&cross);
        i.view_mut((r, 0), (k, r)).copy_from(&cross.transpose());
        i.view_mut((r, r), (k, k)).copy_from(&diag);
        self.i_full = i;

        let mut b = std::mem::replace(&mut self.boundary_rows, DMatrix::zeros(0, 0)).resize_horizontally(r + k, 0.0);
        b.columns_mut(r, k).copy_from(&bw);
        self.boundary_rows = b;

        self.k_last = kw;
        self.widths.push(k);
    }

    /// Dimension of the projection space (all blocks but the last).
    pub fn active_dim(&self) -> usize {
        self.dim() - self.widths.last().copied().unwrap_or(0)
    }

    /// `T_m`, the projection onto the active space.
    pub fn t_proj(&self) -> DMatrix<f64> {
        let r = self.active_dim();
        self.t_full.view((0, 0), (r, r)).into_owned()
    }

    /// `𝓘_m` on the active space.
    pub fn i_proj(&self) -> DMatrix<f64> {
        let r = self.active_dim();
        self.i_full.view((0, 0), (r, r)).into_owned()
    }

    /// `E_{m+1}^T T̲_m = 𝓥_{m+1}^T K V_m`.
    pub fn t_under(&self) -> DMatrix<f64> {
        let r = self.active_dim();
        self.t_full.view((r, 0), (self.dim() - r, r)).into_owned()
    }

    pub fn active_v(&self) -> DMatrix<f64> {
        self.v.columns(0, self.active_dim()).into_owned()
    }
}
