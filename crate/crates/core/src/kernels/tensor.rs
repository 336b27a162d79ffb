//! Mode products on column-stacked tensors.
//!
//! Each column of `y` holds a tensor with `dims[0]` the fastest index.

use nalgebra::{ComplexField, DMatrix};

/// Applies `m` along mode `k`: the mode size changes from `dims[k]` to `m.nrows()`.
pub fn mode_product<T: ComplexField + Copy>(y: &DMatrix<T>, dims: &[usize], k: usize, m: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(y.nrows(), dims.iter().product::<usize>(), "tensor size");
    assert_eq!(m.ncols(), dims[k], "mode size");
    let inner: usize = dims[..k].iter().product();
    let outer: usize = dims[k + 1..].iter().product();
    let (dk, wk) = (dims[k], m.nrows());
    let mut out = DMatrix::from_element(inner * wk * outer, y.ncols(), T::zero());
    for col in 0..y.ncols() {
        let src = y.column(col);
        let mut dst = out.column_mut(col);
        for c in 0..outer {
            for b in 0..dk {
                let base_in = inner * (b + dk * c);
                for bp in 0..wk {
                    let coef = m[(bp, b)];
                    if coef == T::zero() {
                        continue;
                    }
                    let base_out = inner * (bp + wk * c);
                    for a in 0..inner {
                        dst[base_out + a] += coef * src[base_in + a];
                    }
                }
            }
        }
    }
    out
}

/// Applies `mats[k]` along every mode `k`, i.e. `(mats[d-1] ⊗ .. ⊗ mats[0]) y`.
pub fn kron_apply<T: ComplexField + Copy>(y: &DMatrix<T>, mats: &[&DMatrix<T>]) -> DMatrix<T> {
    let mut dims: Vec<usize> = mats.iter().map(|m| m.ncols()).collect();
    let mut cur = y.clone();
    for (k, m) in mats.iter().enumerate() {
        cur = mode_product(&cur, &dims, k, m);
        dims[k] = m.nrows();
    }
    cur
}
