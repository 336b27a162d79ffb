use nalgebra::DMatrix;

use super::basis::{BasisKind, KrylovBasis, KrylovOperator};
use super::orth::orthonormalize_against;
use super::KrylovError;
use crate::kernels::BandedLu;

/// `𝓥_1 = orth(B)` with `B = 𝓥_1 γ`.
pub fn rational_arnoldi_init(op: &KrylovOperator, b: &DMatrix<f64>) -> Result<KrylovBasis, KrylovError> {
    if b.norm() == 0.0 {
        return Err(KrylovError::ZeroStart);
    }
    let first = orthonormalize_against(None, b);
    let mut basis = KrylovBasis::new(BasisKind::Rational, op.dim(), op.boundary().len(), first.new.clone());
    basis.push_block(op, first.q);
    Ok(basis)
}

/// Appends `orth((K - ξI)^{-1} 𝓥_k)` and the matching column block of `H̲`.
pub fn rational_arnoldi_step(op: &KrylovOperator, basis: &mut KrylovBasis, xi: f64) -> Result<(), KrylovError> {
    let lu = BandedLu::factor(op.matrix(), xi).map_err(|_| KrylovError::ShiftSingular { shift: xi })?;
    rational_arnoldi_step_with(op, basis, xi, &lu)
}

/// As [`rational_arnoldi_step`] with a precomputed factorization of `K - ξI`.
pub fn rational_arnoldi_step_with(op: &KrylovOperator, basis: &mut KrylovBasis, xi: f64, lu: &BandedLu) -> Result<(), KrylovError> {
    assert_eq!(basis.kind, BasisKind::Rational);
    let last = basis.last_block();
    let w = lu.solve(&last);
    let o = orthonormalize_against(Some(&basis.v), &w);
    let r = basis.dim();
    let k_new = o.q.ncols();
    let cols_before = basis.h_full.ncols();
    let mut h = std::mem::replace(&mut basis.h_full, DMatrix::zeros(0, 0)).resize(r + k_new, cols_before + last.ncols(), 0.0);
    h.view_mut((0, cols_before), (r, last.ncols())).copy_from(&o.prev);
    h.view_mut((r, cols_before), (k_new, last.ncols())).copy_from(&o.new);
    basis.h_full = h;
    basis.shifts.push(xi);
    basis.push_block(op, o.q);
    if k_new == 0 {
        return Err(KrylovError::Breakdown);
    }
    Ok(())
}

impl KrylovBasis {
    /// `H_m`, the square part of `H̲_m`.
    pub fn h_square(&self) -> DMatrix<f64> {
        let c = self.h_full.ncols();
        self.h_full.view((0, 0), (c, c)).into_owned()
    }

    /// `E_{m+1}^T H̲_m`, the last block row.
    pub fn h_last_row(&self) -> DMatrix<f64> {
        let c = self.h_full.ncols();
        self.h_full.view((c, 0), (self.h_full.nrows() - c, c)).into_owned()
    }
}
