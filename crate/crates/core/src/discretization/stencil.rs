use crate::kernels::SparseMatrix;

/// Negative second difference `(-1, 2, -1)/h^2`, truncated at the ends.
pub fn laplacian_1d(n: usize, h: f64) -> SparseMatrix {
    let c = 1.0 / (h * h);
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, -c));
        }
        t.push((i, i, 2.0 * c));
        if i + 1 < n {
            t.push((i, i + 1, -c));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// Centered first difference `(-1, 0, 1)/(2h)`, truncated at the ends.
pub fn first_derivative_1d(n: usize, h: f64) -> SparseMatrix {
    let c = 0.5 / h;
    let mut t = Vec::with_capacity(2 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, -c));
        }
        if i + 1 < n {
            t.push((i, i + 1, c));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// Replaces the first and last rows by `e_1^T/(τβ)` and `e_n^T/(τβ)`.
pub fn modify_for_boundary(k: &SparseMatrix, tau_beta: f64) -> SparseMatrix {
    let n = k.nrows();
    k.with_identity_rows(&[0, n - 1], 1.0 / tau_beta)
}

/// Diagonal matrix of nodal values.
pub fn nodal_diag(f: &dyn Fn(f64) -> f64, nodes: &[f64]) -> SparseMatrix {
    SparseMatrix::from_diagonal(&nodes.iter().map(|&x| f(x)).collect::<Vec<_>>())
}
