use nalgebra::DMatrix;
use num_complex::Complex64;

/// Thin QR: `x = q * r` with `q` of size `n x min(n, k)` and orthonormal columns.
pub fn qr_economy(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = x.clone().qr();
    (qr.q(), qr.r())
}

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Real part together with the largest absolute imaginary part.
pub fn split_real(a: &DMatrix<Complex64>) -> (DMatrix<f64>, f64) {
    let imag = a.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    (a.map(|z| z.re), imag)
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let nrows = blocks
        .iter()
        .find(|b| b.ncols() > 0)
        .or_else(|| blocks.iter().find(|b| b.nrows() > 0))
        .map_or(0, |b| b.nrows());
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut c = 0;
    for b in blocks {
        if b.ncols() == 0 {
            continue;
        }
        out.columns_mut(c, b.ncols()).copy_from(b);
        c += b.ncols();
    }
    out
}
