use nalgebra::DMatrix;

use super::basis::{BasisKind, KrylovBasis, KrylovOperator};
use super::orth::orthonormalize_against;
use super::KrylovError;
use crate::kernels::hcat;

/// `𝓥_1 = orth([B, K^{-1} B])` with `B = 𝓥_1 γ`.
pub fn extended_arnoldi_init(op: &KrylovOperator, b: &DMatrix<f64>) -> Result<KrylovBasis, KrylovError> {
    if b.norm() == 0.0 {
        return Err(KrylovError::ZeroStart);
    }
    let first = orthonormalize_against(None, b);
    let kinv_b = op.solve(b)?;
    let second = orthonormalize_against(Some(&first.q), &kinv_b);
    let (w1, w2) = (first.q.ncols(), second.q.ncols());
    let mut gamma = DMatrix::zeros(w1 + w2, b.ncols());
    gamma.rows_mut(0, w1).copy_from(&first.new);
    let mut basis = KrylovBasis::new(BasisKind::Extended, op.dim(), op.boundary().len(), gamma);
    basis.push_block(op, hcat(&[&first.q, &second.q]));
    basis.halves = (w1, w2);
    Ok(basis)
}

/// Appends `orth([K 𝓥^(1), K^{-1} 𝓥^(2)])`, the halves orthogonalized
/// separately so the split survives deflation. On `Breakdown` an empty
/// block is appended, so the stored blocks span an invariant subspace.
pub fn extended_arnoldi_step(op: &KrylovOperator, basis: &mut KrylovBasis) -> Result<(), KrylovError> {
    assert_eq!(basis.kind, BasisKind::Extended);
    let (w1, w2) = basis.halves;
    let last = basis.last_block();
    let x1 = basis.k_last.columns(0, w1).into_owned();
    let x2 = op.solve(&last.columns(w1, w2).into_owned())?;
    let first = orthonormalize_against(Some(&basis.v), &x1);
    let v_ext = hcat(&[&basis.v, &first.q]);
    let second = orthonormalize_against(Some(&v_ext), &x2);
    let (n1, n2) = (first.q.ncols(), second.q.ncols());
    basis.push_block(op, hcat(&[&first.q, &second.q]));
    basis.halves = (n1, n2);
    if n1 + n2 == 0 {
        return Err(KrylovError::Breakdown);
    }
    Ok(())
}
