use nalgebra::DMatrix;

/// Result of orthonormalizing a block `x` against an orthonormal `v`:
/// `x ≈ v * prev + q * new`, with `q` orthonormal and orthogonal to `v`.
#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub q: DMatrix<f64>,
    pub prev: DMatrix<f64>,
    pub new: DMatrix<f64>,
}

/// Relative deflation threshold on the singular values of the projected block.
pub const DEFLATION_TOL: f64 = 1e-12;

/// Classical Gram-Schmidt twice against `v`, then a rank-revealing QR
/// (Householder QR followed by an SVD of the small triangle). Directions
/// with singular value below `DEFLATION_TOL * ‖x‖_F` are dropped.
pub fn orthonormalize_against(v: Option<&DMatrix<f64>>, x: &DMatrix<f64>) -> Orthonormalized {
    let n = x.nrows();
    let k = x.ncols();
    let scale = x.norm();
    let mut w = x.clone();
    let r = v.map_or(0, |v| v.ncols());
    let mut prev = DMatrix::zeros(r, k);
    if let Some(v) = v.filter(|v| v.ncols() > 0) {
        for _ in 0..2 {
            let h = v.transpose() * &w;
            w -= v * &h;
            prev += h;
        }
    }
    if k == 0 || scale == 0.0 {
        return Orthonormalized { q: DMatrix::zeros(n, 0), prev, new: DMatrix::zeros(0, k) };
    }
    let qr = w.qr();
    let (qx, rx) = (qr.q(), qr.r());
    let svd = rx.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > DEFLATION_TOL * scale)
        .collect();
    let uk = DMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])]);
    // U_k^T R rather than Σ_k V_k^T: the SVD factors of small triangles are
    // only accurate to ~1e-11 in the product
    let new = uk.transpose() * &rx;
    Orthonormalized { q: qx * uk, prev, new }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dependent_columns_deflate() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let o = orthonormalize_against(None, &x);
        assert_eq!(o.q.ncols(), 2);
        assert!((&o.q * &o.new - &x).norm() < 1e-12);
    }

    #[test]
    fn block_inside_span_vanishes() {
        let v = DMatrix::from_fn(5, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = DMatrix::from_fn(5, 2, |i, j| if i < 2 { (i + 2 * j) as f64 + 1.0 } else { 0.0 });
        let o = orthonormalize_against(Some(&v), &x);
        assert_eq!(o.q.ncols(), 0);
        assert!((&v * &o.prev - &x).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn reconstructs_and_is_orthogonal(vals in proptest::collection::vec(-1.0f64..1.0, 60)) {
            let base = DMatrix::from_fn(12, 2, |i, j| vals[i + 12 * j]);
            let v = orthonormalize_against(None, &base).q;
            let x = DMatrix::from_fn(12, 3, |i, j| vals[24 + (i + 12 * j) % 36]);
            let o = orthonormalize_against(Some(&v), &x);
            prop_assert!((&v * &o.prev + &o.q * &o.new - &x).norm() <= 1e-12 * (1.0 + x.norm()));
            prop_assert!((v.transpose() * &o.q).norm() <= 1e-13);
            let m = o.q.ncols();
            prop_assert!((o.q.transpose() * &o.q - DMatrix::<f64>::identity(m, m)).norm() <= 1e-13);
        }
    }
}
