use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{InnerSolver, SolveError};
use crate::kernels::{dense_eig, kron_apply, split_real, to_complex, Eigendecomposition, KernelError};
use crate::timeops::TimeOperator;

const RESONANCE_TOL: f64 = 1e-14;
const IMAG_TOL: f64 = 1e-10;
/// Accepted projected residual of an FFT+SMW solution before falling back.
const FFT_CHECK_TOL: f64 = 1e-11;

/// Coefficient matrix of the projected equation.
#[derive(Clone, Debug)]
pub enum ProjectedMatrix {
    Dense(DMatrix<f64>),
    /// `I + τβ (T_1 ⊕ .. ⊕ T_d)` with `factors[0]` on the fastest index.
    KroneckerSum { factors: Vec<DMatrix<f64>>, tau_beta: f64 },
}

impl ProjectedMatrix {
    pub fn dim(&self) -> usize {
        match self {
            ProjectedMatrix::Dense(a) => a.nrows(),
            ProjectedMatrix::KroneckerSum { factors, .. } => factors.iter().map(|f| f.nrows()).product(),
        }
    }

    fn mode_dims(&self) -> Vec<usize> {
        match self {
            ProjectedMatrix::Dense(a) => vec![a.nrows()],
            ProjectedMatrix::KroneckerSum { factors, .. } => factors.iter().map(|f| f.nrows()).collect(),
        }
    }

    pub fn apply(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            ProjectedMatrix::Dense(a) => a * y,
            ProjectedMatrix::KroneckerSum { factors, tau_beta } => {
                let dims = self.mode_dims();
                let mut out = y.clone();
                for (k, f) in factors.iter().enumerate() {
                    out += crate::kernels::mode_product(y, &dims, k, f) * *tau_beta;
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ProjectedMatrix::Dense(a) => a.clone(),
            _ => self.apply(&DMatrix::identity(self.dim(), self.dim())),
        }
    }

    fn diagonalize(&self) -> Result<Diagonalization, SolveError> {
        let eig = |a: &DMatrix<f64>| {
            dense_eig(a).map_err(|e| match e {
                KernelError::NonDiagonalizable { cond } => SolveError::EigFallback { cond },
                other => SolveError::Kernel(other),
            })
        };
        match self {
            ProjectedMatrix::Dense(a) => {
                let e = eig(a)?;
                Ok(Diagonalization { values: e.values.clone(), parts: vec![e] })
            }
            ProjectedMatrix::KroneckerSum { factors, tau_beta } => {
                let parts = factors.iter().map(eig).collect::<Result<Vec<_>, _>>()?;
                let mut values = vec![Complex64::new(1.0, 0.0)];
                for p in &parts {
                    values = p.values.iter().flat_map(|&mu| values.iter().map(move |&v| v + mu * *tau_beta)).collect();
                }
                Ok(Diagonalization { values, parts })
            }
        }
    }
}

/// `A = S Λ S^{-1}`, with `S` a Kronecker product for Kronecker sums.
struct Diagonalization {
    values: Vec<Complex64>,
    parts: Vec<Eigendecomposition>,
}

impl Diagonalization {
    fn to_eig(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        kron_apply(x, &self.parts.iter().map(|p| &p.inverse).collect::<Vec<_>>())
    }

    fn from_eig(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        kron_apply(x, &self.parts.iter().map(|p| &p.vectors).collect::<Vec<_>>())
    }
}

/// `A Y - Y Σ^T = rhs_left rhs_right^T`.
#[derive(Clone, Debug)]
pub struct ProjectedProblem<'a> {
    pub a_small: ProjectedMatrix,
    pub rhs_left: DMatrix<f64>,
    pub rhs_right: DMatrix<f64>,
    pub timeop: &'a TimeOperator,
}

impl ProjectedProblem<'_> {
    pub fn dim(&self) -> usize {
        self.a_small.dim()
    }

    pub fn rhs_dense(&self) -> DMatrix<f64> {
        &self.rhs_left * self.rhs_right.transpose()
    }

    /// `Y Σ^T`: column `k` is `Σ_j α_j y_{k-j}`.
    pub fn apply_sigma_t(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(y.nrows(), y.ncols());
        for k in 0..y.ncols() {
            for (j, &a) in self.timeop.alpha.iter().enumerate() {
                if k > j {
                    out.column_mut(k).axpy(a, &y.column(k - j - 1), 1.0);
                }
            }
        }
        out
    }

    /// `A Y - Y Σ^T - rhs`.
    pub fn residual(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.a_small.apply(y) - self.apply_sigma_t(y) - self.rhs_dense()
    }

    fn is_zero(&self) -> bool {
        self.rhs_left.iter().all(|&v| v == 0.0) || self.rhs_right.iter().all(|&v| v == 0.0)
    }
}

/// Column recursion `A y_j = g_j + Σ_{i ≤ min(s, j-1)} α_i y_{j-i}` with one
/// factorization of `A`.
pub fn inner_solve_sequential(prob: &ProjectedProblem) -> Result<DMatrix<f64>, SolveError> {
    let r = prob.dim();
    let l = prob.timeop.dim();
    let g = prob.rhs_dense();
    let solve: Box<dyn Fn(DMatrix<f64>) -> DMatrix<f64>> = match &prob.a_small {
        ProjectedMatrix::Dense(a) => {
            let lu = a.clone().lu();
            if !lu.is_invertible() || a.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::SingularProjectedMatrix);
            }
            let scale = a.amax();
            let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            if min_pivot <= f64::EPSILON * scale {
                return Err(SolveError::SingularProjectedMatrix);
            }
            Box::new(move |b| lu.solve(&b).expect("checked invertible"))
        }
        ProjectedMatrix::KroneckerSum { .. } => {
            // eigenvalues of the Kronecker sum give the factorization
            let diag = prob.a_small.diagonalize()?;
            if diag.values.iter().any(|v| v.norm() <= f64::EPSILON) {
                return Err(SolveError::SingularProjectedMatrix);
            }
            Box::new(move |b| {
                let mut z = diag.to_eig(&to_complex(&b));
                for (i, mut row) in z.row_iter_mut().enumerate() {
                    row /= diag.values[i];
                }
                split_real(&diag.from_eig(&z)).0
            })
        }
    };
    let mut y = DMatrix::zeros(r, l);
    for j in 0..l {
        let mut b = g.column(j).into_owned();
        for (i, &a) in prob.timeop.alpha.iter().enumerate() {
            if j > i {
                b.axpy(a, &y.column(j - i - 1), 1.0);
            }
        }
        let col = solve(DMatrix::from_column_slice(r, 1, b.as_slice()));
        y.set_column(j, &col.column(0));
    }
    Ok(y)
}

/// Pieces of the circulant splitting `Σ^T = C_s^T - E_L 𝛂^T E_1^T`, in
/// eigen-coordinates `Ŷ = S^{-1} Y F`:
/// `Λ Ŷ - Ŷ Π + Ŷ N M = G`.
struct SmwParts {
    diag: Diagonalization,
    /// `H_ij = 1/(λ_i - π_j)`.
    h: DMatrix<Complex64>,
    /// `F^{-1} E_L 𝛂^T`, `L × s`.
    n: DMatrix<Complex64>,
    /// First `s` rows of `F`.
    m: DMatrix<Complex64>,
}

fn smw_parts(prob: &ProjectedProblem) -> Result<SmwParts, SolveError> {
    let t = prob.timeop;
    let (l, s) = (t.dim(), t.s);
    let diag = prob.a_small.diagonalize()?;
    let r = diag.values.len();
    let mut h = DMatrix::zeros(r, l);
    for (i, &lam) in diag.values.iter().enumerate() {
        let tol = RESONANCE_TOL * lam.norm().max(1.0);
        for (j, &pi) in t.pi.iter().enumerate() {
            let d = lam - pi;
            if d.norm() <= tol {
                return Err(SolveError::ResonantEigenvalue { lambda: lam, pi });
            }
            h[(i, j)] = d.inv();
        }
    }
    let alpha = t.alpha_block();
    let mut n = DMatrix::zeros(l, s);
    for b in 0..s {
        let mut col = vec![Complex64::new(0.0, 0.0); l];
        for c in 0..s {
            col[l - s + c] = Complex64::new(alpha[(b, c)], 0.0);
        }
        t.plan().inverse(&mut col);
        n.set_column(b, &nalgebra::DVector::from_vec(col));
    }
    let m = DMatrix::from_fn(s, l, |a, j| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((a * j) % l) as f64 / l as f64));
    Ok(SmwParts { diag, h, n, m })
}

/// `Q_i = M diag(H_i,:) N`, the `s × s` correction for row `i`.
fn q_block(parts: &SmwParts, i: usize) -> DMatrix<Complex64> {
    let s = parts.m.nrows();
    let mut q = DMatrix::zeros(s, s);
    for j in 0..parts.h.ncols() {
        let hij = parts.h[(i, j)];
        for a in 0..s {
            let mh = parts.m[(a, j)] * hij;
            for b in 0..s {
                q[(a, b)] += mh * parts.n[(j, b)];
            }
        }
    }
    q
}

/// Diagonalize-FFT solve with a rank-`s` Sherman-Morrison-Woodbury correction.
pub fn inner_solve_fft_smw(prob: &ProjectedProblem) -> Result<DMatrix<f64>, SolveError> {
    let t = prob.timeop;
    let (l, s, r) = (t.dim(), t.s, prob.dim());
    if prob.is_zero() {
        return Ok(DMatrix::zeros(r, l));
    }
    let parts = smw_parts(prob)?;

    // G = (S^{-1} left)(F right)^T
    let lh = parts.diag.to_eig(&to_complex(&prob.rhs_left));
    let mut rh = to_complex(&prob.rhs_right);
    t.plan().forward(rh.as_mut_slice());
    let z = (lh * rh.transpose()).component_mul(&parts.h);

    // P = Ŷ N, row by row: P_i (I + Q_i) = (Z N)_i
    let zn = &z * &parts.n;
    let mut p = DMatrix::zeros(r, s);
    for i in 0..r {
        let q = q_block(&parts, i);
        let lhs = (DMatrix::identity(s, s) + q).transpose();
        let rhs = zn.row(i).transpose();
        let sol = lhs.lu().solve(&rhs).ok_or(SolveError::SmwSingular)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::SmwSingular);
        }
        p.set_row(i, &sol.transpose());
    }
    let yhat = z - (p * &parts.m).component_mul(&parts.h);

    // Y = S Ŷ F^{-1}, the inverse transforms batched along rows
    let mut rows = yhat.transpose();
    t.plan().inverse(rows.as_mut_slice());
    let y = parts.diag.from_eig(&rows.transpose());
    let (re, imag) = split_real(&y);
    let norm = re.norm();
    if imag > IMAG_TOL * norm {
        return Err(SolveError::ImaginaryResidue { residue: imag, norm });
    }
    Ok(re)
}

/// Solves with the requested scheme. The FFT path is checked against the
/// projected residual and replaced by the recursion when it fails or is
/// inaccurate; the scheme actually used is returned.
pub fn inner_solve(prob: &ProjectedProblem, inner: InnerSolver) -> Result<(DMatrix<f64>, InnerSolver), SolveError> {
    if inner == InnerSolver::Sequential {
        return Ok((inner_solve_sequential(prob)?, InnerSolver::Sequential));
    }
    match inner_solve_fft_smw(prob) {
        Ok(y) => {
            let res = prob.residual(&y).norm();
            let scale = prob.rhs_dense().norm() + prob.a_small.apply(&y).norm() + prob.apply_sigma_t(&y).norm();
            if res <= FFT_CHECK_TOL * scale {
                return Ok((y, InnerSolver::FftSmw));
            }
            log::debug!("fft_smw projected residual {res:e} (scale {scale:e}); switching to sequential");
        }
        Err(e) if e.is_fft_fallback() => log::debug!("fft_smw unavailable: {e}; switching to sequential"),
        Err(e) => return Err(e),
    }
    Ok((inner_solve_sequential(prob)?, InnerSolver::Sequential))
}

/// The SMW core `N^T L^{-1} M` assembled from the per-row `s × s` blocks:
/// block `(b, a)` is `diag_i((Q_i)_{ab})`.
pub fn smw_core_structured(prob: &ProjectedProblem) -> Result<DMatrix<Complex64>, SolveError> {
    let parts = smw_parts(prob)?;
    let (r, s) = (parts.h.nrows(), parts.m.nrows());
    let mut core = DMatrix::zeros(s * r, s * r);
    for i in 0..r {
        let q = q_block(&parts, i);
        for a in 0..s {
            for b in 0..s {
                core[(b * r + i, a * r + i)] = q[(a, b)];
            }
        }
    }
    Ok(core)
}

/// The same core by brute force from the dense Kronecker factors
/// `L = I ⊗ Λ - Π ⊗ I`, `U = M^T ⊗ I`, `V^T = N^T ⊗ I`.
pub fn smw_core_dense(prob: &ProjectedProblem) -> Result<DMatrix<Complex64>, SolveError> {
    let parts = smw_parts(prob)?;
    let (r, l) = parts.h.shape();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(parts.diag.values.clone()));
    let pi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(prob.timeop.pi.clone()));
    let id_r = DMatrix::<Complex64>::identity(r, r);
    let big_l = DMatrix::<Complex64>::identity(l, l).kronecker(&lam) - pi.kronecker(&id_r);
    let l_inv = big_l.try_inverse().ok_or(SolveError::SmwSingular)?;
    let u = parts.m.transpose().kronecker(&id_r);
    let vt = parts.n.transpose().kronecker(&id_r);
    Ok(vt * l_inv * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeops::build_time_operator;
    use proptest::prelude::*;

    fn problem<'a>(t: &'a TimeOperator, a: DMatrix<f64>, q: usize, seed: u64) -> ProjectedProblem<'a> {
        let r = a.nrows();
        let l = t.dim();
        let f = |i: usize, j: usize, k: u64| (((i * 31 + j * 17) as u64 * 2654435761 + k * 97) % 1000) as f64 / 500.0 - 1.0;
        ProjectedProblem {
            a_small: ProjectedMatrix::Dense(a),
            rhs_left: DMatrix::from_fn(r, q, |i, j| f(i, j, seed)),
            rhs_right: DMatrix::from_fn(l, q, |i, j| if j == 0 { (i == 0) as u8 as f64 } else { 0.01 * f(i, j, seed + 1) }),
            timeop: t,
        }
    }

    fn spd(r: usize, shift: f64, skew: f64, seed: u64) -> DMatrix<f64> {
        let b = DMatrix::from_fn(r, r, |i, j| ((((i * 13 + j * 7) as u64 + seed) * 2654435761 % 997) as f64) / 997.0 - 0.5);
        let k = DMatrix::from_fn(r, r, |i, j| ((((i * 5 + j * 11) as u64 + seed) * 40503 % 991) as f64) / 991.0 - 0.5);
        DMatrix::identity(r, r) * shift + &b * b.transpose() + (&k - k.transpose()) * skew
    }

    #[test]
    fn scalar_recursion() {
        let t = build_time_operator(3, 1, 1.0).unwrap();
        let p = ProjectedProblem {
            a_small: ProjectedMatrix::Dense(DMatrix::from_element(1, 1, 2.0)),
            rhs_left: DMatrix::from_element(1, 1, 1.0),
            rhs_right: DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
            timeop: &t,
        };
        let want = [0.5, 0.25, 0.125];
        let y = inner_solve_sequential(&p).unwrap();
        assert_eq!(y.as_slice(), &want);
        let t4 = build_time_operator(4, 1, 1.0).unwrap();
        let p4 = ProjectedProblem { rhs_right: DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]), timeop: &t4, ..p };
        let y = inner_solve_fft_smw(&p4).unwrap();
        for (k, v) in [0.5, 0.25, 0.125, 0.0625].iter().enumerate() {
            assert!((y[(0, k)] - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let t = build_time_operator(20, 2, 0.05).unwrap();
        let mut p = problem(&t, spd(4, 1.5, 0.0, 1), 2, 3);
        p.rhs_left.fill(0.0);
        assert_eq!(inner_solve_sequential(&p).unwrap().amax(), 0.0);
        assert_eq!(inner_solve_fft_smw(&p).unwrap().amax(), 0.0);
    }

    #[test]
    fn sequential_solves_projected_equation() {
        let t = build_time_operator(42, 3, 0.02).unwrap();
        let p = problem(&t, spd(5, 1.2, 0.1, 9), 3, 4);
        let y = inner_solve_sequential(&p).unwrap();
        assert!(p.residual(&y).norm() <= 1e-12 * p.rhs_dense().norm());
    }

    #[test]
    fn singular_matrix_rejected() {
        let t = build_time_operator(10, 1, 0.1).unwrap();
        let p = problem(&t, DMatrix::zeros(3, 3), 1, 0);
        assert!(matches!(inner_solve_sequential(&p), Err(SolveError::SingularProjectedMatrix)));
    }

    #[test]
    fn resonance_detected_and_dispatched() {
        let t = build_time_operator(8, 1, 0.1).unwrap();
        // π_0 = Σ α_j = 1
        let p = problem(&t, DMatrix::identity(2, 2), 1, 0);
        assert!(matches!(inner_solve_fft_smw(&p), Err(SolveError::ResonantEigenvalue { .. })));
        let (y, used) = inner_solve(&p, InnerSolver::FftSmw).unwrap();
        assert_eq!(used, InnerSolver::Sequential);
        assert!(p.residual(&y).norm() < 1e-12 * p.rhs_dense().norm());
    }

    #[test]
    fn kronecker_sum_matches_dense() {
        let t = build_time_operator(30, 2, 0.03).unwrap();
        let (a, b) = (spd(3, 0.5, 0.0, 1), spd(4, 0.7, 0.0, 2));
        let kp = ProjectedMatrix::KroneckerSum { factors: vec![a.clone(), b.clone()], tau_beta: 0.3 };
        let dense = DMatrix::identity(12, 12) + (DMatrix::identity(4, 4).kronecker(&a) + b.kronecker(&DMatrix::identity(3, 3))) * 0.3;
        assert!((kp.to_dense() - &dense).amax() < 1e-14);
        let mut p = problem(&t, dense, 2, 5);
        let y_dense = inner_solve_sequential(&p).unwrap();
        p.a_small = kp;
        let y_seq = inner_solve_sequential(&p).unwrap();
        let y_fft = inner_solve_fft_smw(&p).unwrap();
        assert!((&y_seq - &y_dense).norm() < 1e-12 * y_dense.norm());
        assert!((&y_fft - &y_dense).norm() < 1e-11 * y_dense.norm());
    }

    #[test]
    fn smw_core_structure_small() {
        for s in 1..=4 {
            let t = build_time_operator(12 + s, s, 0.1).unwrap();
            let p = problem(&t, spd(3, 1.1, 0.2, s as u64), 1, 1);
            let d = smw_core_dense(&p).unwrap();
            let st = smw_core_structured(&p).unwrap();
            assert!((&d - &st).camax() <= 1e-12 * d.camax().max(1.0), "s={s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fft_matches_sequential(s in 1usize..=6, r in 1usize..=8, l in 10usize..80, skew in 0.0f64..0.3, seed in 0u64..1000) {
            let t = build_time_operator(l + s - 1, s, 1.0 / l as f64).unwrap();
            let p = problem(&t, spd(r, 1.05, skew, seed), 2, seed);
            let y_seq = inner_solve_sequential(&p).unwrap();
            let y_fft = inner_solve_fft_smw(&p).unwrap();
            prop_assert!((&y_fft - &y_seq).norm() <= 1e-10 * y_seq.norm().max(1e-300));
        }
    }
}
