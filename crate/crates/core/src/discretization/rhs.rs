//! Factored right-hand side `[u_0-terms, F_1] [e_1..e_s, τβ F_2]^T`.
//!
//! Boundary rows are built so the discrete solution matches the Dirichlet
//! data exactly: for unknown column `k` and boundary node `j`,
//! `τβ F_{jk} = (A g(t_k))_j - Σ_i α_i g_j(t_{k-i})` with `A = (I - P) + τβ K̄`.
//! Boundary rows of `A` only couple boundary nodes, so `A g` only needs
//! the Dirichlet data itself.

use nalgebra::{DMatrix, DVector};

use super::functions::{SpaceFn, SpaceTime, Term};
use super::operator::SpaceOperator;
use super::problem::ProblemSpec;
use super::{DiscretizationError, Grid};
use crate::kernels::{hcat, BandedLu};
use crate::timeops::bdf_coefficients;

/// `rhs = left * right^T`.
#[derive(Clone, Debug)]
pub struct LowRankRhs {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    /// Leading columns carrying initial values (`s` of them).
    pub n_initial: usize,
    pub separable: Option<SeparableRhs>,
}

/// `rhs = Σ_t (f_{t,d} ⊗ .. ⊗ f_{t,1}) time_t^T`.
#[derive(Clone, Debug)]
pub struct SeparableRhs {
    pub terms: Vec<SeparableTerm>,
}

#[derive(Clone, Debug)]
pub struct SeparableTerm {
    /// One vector per direction, `x` first.
    pub factors: Vec<DVector<f64>>,
    pub time: DVector<f64>,
}

impl SeparableTerm {
    pub fn kron(&self) -> DVector<f64> {
        let mut it = self.factors.iter().rev();
        let first = it.next().expect("at least one factor").clone();
        it.fold(first, |acc, f| acc.kronecker(f))
    }
}

impl SeparableRhs {
    pub fn left(&self) -> DMatrix<f64> {
        let cols: Vec<DMatrix<f64>> = self.terms.iter().map(|t| DMatrix::from_column_slice(t.kron().len(), 1, t.kron().as_slice())).collect();
        hcat(&cols.iter().collect::<Vec<_>>())
    }

    pub fn right(&self) -> DMatrix<f64> {
        let cols: Vec<DMatrix<f64>> = self.terms.iter().map(|t| DMatrix::from_column_slice(t.time.len(), 1, t.time.as_slice())).collect();
        hcat(&cols.iter().collect::<Vec<_>>())
    }

    /// `‖Σ_t a_t b_t^T‖_F` without forming the Kronecker products.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for a in &self.terms {
            for b in &self.terms {
                let space: f64 = a.factors.iter().zip(&b.factors).map(|(x, y)| x.dot(y)).product();
                s += space * a.time.dot(&b.time);
            }
        }
        s.max(0.0).sqrt()
    }
}

impl LowRankRhs {
    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    /// `δ = ‖left right^T‖_F`.
    pub fn norm(&self) -> f64 {
        let g = (self.left.transpose() * &self.left).component_mul(&(self.right.transpose() * &self.right));
        g.sum().max(0.0).sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RhsOptions {
    /// Generate missing BDF starting values by lower-order steps instead of failing.
    pub startup_fallback: bool,
}

pub fn assemble_rhs(spec: &ProblemSpec, op: &SpaceOperator) -> Result<LowRankRhs, DiscretizationError> {
    assemble_rhs_with(spec, op, RhsOptions::default())
}

pub fn assemble_rhs_with(spec: &ProblemSpec, op: &SpaceOperator, opts: RhsOptions) -> Result<LowRankRhs, DiscretizationError> {
    spec.validate()?;
    let grid = &spec.grid;
    let s = spec.s;
    let (beta, alpha) = bdf_coefficients(s)?;
    let tau_beta = grid.tau() * beta;
    let cols = (grid.ell + 1).saturating_sub(s);
    if cols <= s {
        return Err(crate::timeops::TimeOpError::TooFewSteps { steps: grid.ell, s, cols }.into());
    }
    let nn = grid.num_nodes();
    let boundary = op.boundary_indices();
    let mask = op.interior_mask();
    let times: Vec<f64> = (0..=grid.ell).map(|k| grid.time(k)).collect();

    // starting values u_0, ..., u_{s-1} with Dirichlet data on the boundary
    let mut history = Vec::with_capacity(s);
    let mut u0 = spec.u0.sample(grid);
    overwrite_boundary(&mut u0, &boundary_values(spec, 0.0), boundary);
    history.push(u0);
    if s > 1 {
        match spec.history_fn() {
            Some(h) => {
                for &t in times.iter().take(s).skip(1) {
                    let mut u = sample_xt(grid, &|x: &[f64]| h(x, t));
                    overwrite_boundary(&mut u, &boundary_values(spec, t), boundary);
                    history.push(u);
                }
            }
            None if opts.startup_fallback => history = startup_steps(spec, op, history.remove(0))?,
            None => return Err(DiscretizationError::MissingInitialValues { s }),
        }
    }

    let mut init_cols = Vec::with_capacity(s);
    for c in 0..s {
        let mut v = DVector::zeros(nn);
        for j in c + 1..=s {
            v.axpy(alpha[j - 1], &history[s + c - j], 1.0);
        }
        init_cols.push(v);
    }

    // source and boundary contributions, scaled by τβ on the time side
    let mut f_left: Vec<DVector<f64>> = Vec::new();
    let mut f_right: Vec<DVector<f64>> = Vec::new();
    let col_times = |k0: usize| -> Vec<f64> { (0..cols).map(|c| times[s + c - k0]).collect() };
    match &spec.source {
        SpaceTime::Terms(terms) => {
            for term in terms.iter().filter(|t| !t.space.is_zero()) {
                f_left.push(term.space.sample(grid).component_mul(&DVector::from_column_slice(&mask)));
                f_right.push(DVector::from_iterator(cols, col_times(0).into_iter().map(|t| tau_beta * (term.time.0)(t))));
            }
        }
        SpaceTime::General(f) => {
            let mut dense = DMatrix::zeros(nn, cols);
            for c in 0..cols {
                let t = times[s + c];
                let v = sample_xt(grid, &|x: &[f64]| f(x, t)).component_mul(&DVector::from_column_slice(&mask));
                dense.set_column(c, &v);
            }
            let (l, r) = compress_snapshots(&dense, 1e-12);
            for k in 0..l.ncols() {
                f_left.push(l.column(k).into_owned());
                f_right.push(r.column(k).into_owned() * tau_beta);
            }
        }
    }
    for term in spec.boundary.iter().filter(|t| !t.space.is_zero()) {
        let mut g = term.space.sample(grid);
        g.component_mul_assign(&DVector::from_iterator(nn, mask.iter().map(|m| 1.0 - m)));
        let kg = op.apply(&DMatrix::from_column_slice(nn, 1, g.as_slice()));
        let mut a = DVector::zeros(nn);
        for &j in boundary {
            a[j] = kg[(j, 0)];
        }
        let d = |t: f64| (term.time.0)(t);
        f_left.push(a);
        f_right.push(DVector::from_iterator(cols, col_times(0).into_iter().map(|t| tau_beta * d(t))));
        f_left.push(-g);
        f_right.push(DVector::from_fn(cols, |c, _| (1..=s).map(|j| alpha[j - 1] * d(times[s + c - j])).sum()));
    }

    let (f1, f2) = if f_left.is_empty() {
        (DMatrix::zeros(nn, 0), DMatrix::zeros(cols, 0))
    } else {
        let l = DMatrix::from_columns(&f_left);
        let r = DMatrix::from_columns(&f_right);
        recompress(&l, &r, 1e-14)
    };

    let mut e = DMatrix::zeros(cols, s);
    for c in 0..s {
        e[(c, c)] = 1.0;
    }
    let init = DMatrix::from_columns(&init_cols);
    let left = hcat(&[&init, &f1]);
    let right = hcat(&[&e, &f2]);
    let separable = separable_terms(spec, op, &e, tau_beta, cols);
    Ok(LowRankRhs { left, right, n_initial: s, separable })
}

fn separable_terms(spec: &ProblemSpec, op: &SpaceOperator, e: &DMatrix<f64>, tau_beta: f64, cols: usize) -> Option<SeparableRhs> {
    if spec.s != 1 || spec.has_boundary_data() || op.factors().is_none() {
        return None;
    }
    let grid = &spec.grid;
    let zero_ends = |mut v: DVector<f64>| {
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        v
    };
    let mut terms = Vec::new();
    match &spec.u0 {
        SpaceFn::Zero => {}
        f => terms.push(SeparableTerm {
            factors: f.factor_samples(grid)?.into_iter().map(zero_ends).collect(),
            time: e.column(0).into_owned(),
        }),
    }
    let SpaceTime::Terms(source) = &spec.source else { return None };
    for Term { space, time } in source.iter().filter(|t| !t.space.is_zero()) {
        terms.push(SeparableTerm {
            factors: space.factor_samples(grid)?.into_iter().map(zero_ends).collect(),
            time: DVector::from_fn(cols, |c, _| tau_beta * (time.0)(grid.time(1 + c))),
        });
    }
    Some(SeparableRhs { terms })
}

fn sample_xt(grid: &Grid, f: &dyn Fn(&[f64]) -> f64) -> DVector<f64> {
    let nodes: Vec<Vec<f64>> = (0..grid.d).map(|k| grid.nodes(k)).collect();
    DVector::from_fn(grid.num_nodes(), |idx, _| f(&grid.point(idx, &nodes)[..grid.d]))
}

/// Dirichlet data at time `t` on every node (values off the boundary are unused).
pub fn boundary_values(spec: &ProblemSpec, t: f64) -> DVector<f64> {
    let mut g = DVector::zeros(spec.grid.num_nodes());
    for term in &spec.boundary {
        g.axpy((term.time.0)(t), &term.space.sample(&spec.grid), 1.0);
    }
    g
}

fn overwrite_boundary(u: &mut DVector<f64>, g: &DVector<f64>, boundary: &[usize]) {
    for &j in boundary {
        u[j] = g[j];
    }
}

/// `u_1, ..., u_{s-1}` by BDF of increasing order, each step imposing the
/// boundary data directly.
fn startup_steps(spec: &ProblemSpec, op: &SpaceOperator, u0: DVector<f64>) -> Result<Vec<DVector<f64>>, DiscretizationError> {
    let grid = &spec.grid;
    let tau = grid.tau();
    let boundary = op.boundary_indices();
    let mask = DVector::from_column_slice(&op.interior_mask());
    let mut hist = vec![u0];
    for k in 1..spec.s {
        let (beta, alpha) = bdf_coefficients(k)?;
        let m = crate::kernels::SparseMatrix::identity(grid.num_nodes())
            .add_scaled(1.0, op.assembled(), tau * beta)
            .with_identity_rows(boundary, 1.0);
        let lu = BandedLu::factor(&m, 0.0)?;
        let t = grid.time(k);
        let f = sample_xt(grid, &|x: &[f64]| spec.source.eval(x, t));
        let mut rhs = f * (tau * beta);
        for (i, a) in alpha.iter().enumerate() {
            rhs.axpy(*a, &hist[k - 1 - i], 1.0);
        }
        rhs.component_mul_assign(&mask);
        overwrite_boundary(&mut rhs, &boundary_values(spec, t), boundary);
        hist.push(DVector::from_vec(lu.solve_vec(rhs.as_slice())));
    }
    Ok(hist)
}

/// Truncated SVD `F ≈ F_1 F_2^T` of minimal rank with `‖F - F_1 F_2^T‖_F ≤ tol ‖F‖_F`.
pub fn compress_snapshots(f: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let svd = f.clone().svd(true, false);
    let sv = &svd.singular_values;
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let budget = tol * tol * total;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut k = order.len();
    let mut tail = 0.0;
    while k > 0 && tail + sv[order[k - 1]].powi(2) <= budget {
        tail += sv[order[k - 1]].powi(2);
        k -= 1;
    }
    // project onto U_k instead of using Σ V^T, which is less accurate
    let u = svd.u.as_ref().expect("u requested");
    let f1 = DMatrix::from_fn(f.nrows(), k, |i, j| u[(i, order[j])]);
    let f2 = f.transpose() * &f1;
    (f1, f2)
}

/// Recompresses `l r^T`, dropping singular values below `rtol ‖l‖_F ‖r‖_F`
/// (an absolute scale, so exact cancellations vanish).
pub fn recompress(l: &DMatrix<f64>, r: &DMatrix<f64>, rtol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (ql, rl) = crate::kernels::qr_economy(l);
    let (qr, rr) = crate::kernels::qr_economy(r);
    let core = rl * rr.transpose();
    let svd = core.clone().svd(true, false);
    let sv = &svd.singular_values;
    let cut = rtol * l.norm() * r.norm();
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut && sv[i] > 0.0).collect();
    let u = svd.u.as_ref().expect("u requested");
    let uk = DMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])]);
    let vs = core.transpose() * &uk;
    (ql * uk, qr * vs)
}
