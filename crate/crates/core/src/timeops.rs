//! BDF coefficients and the all-at-once time matrices.
//!
//! For `s` steps the time matrix `Σ = Σ_j α_j Σ_j` (ones on the `j`-th
//! subdiagonal) splits as a circulant minus a rank-`s` corner correction:
//! `Σ = C_s - [e_1..e_s] 𝛂_s [e_{L-s+1}..e_L]^T`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::FftPlan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeOpError {
    #[error("BDF order {0} is not supported (1..=6)")]
    UnsupportedOrder(usize),
    #[error("{steps} time steps leave {cols} unknown columns, need more than s = {s}")]
    TooFewSteps { steps: usize, s: usize, cols: usize },
}

/// Exact BDF coefficients as integer fractions: `β = beta.0 / beta.1`,
/// `α_j = alpha[j-1] / den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BdfRational {
    pub beta: (i64, i64),
    pub alpha: Vec<i64>,
    pub den: i64,
}

pub fn bdf_rational(s: usize) -> Result<BdfRational, TimeOpError> {
    let (beta, alpha, den): ((i64, i64), &[i64], i64) = match s {
        1 => ((1, 1), &[1], 1),
        2 => ((2, 3), &[4, -1], 3),
        3 => ((6, 11), &[18, -9, 2], 11),
        4 => ((12, 25), &[48, -36, 16, -3], 25),
        5 => ((60, 137), &[300, -300, 200, -75, 12], 137),
        6 => ((60, 147), &[360, -450, 400, -225, 72, -10], 147),
        _ => return Err(TimeOpError::UnsupportedOrder(s)),
    };
    Ok(BdfRational { beta, alpha: alpha.to_vec(), den })
}

/// `(β, [α_1..α_s])` in floating point.
pub fn bdf_coefficients(s: usize) -> Result<(f64, Vec<f64>), TimeOpError> {
    let r = bdf_rational(s)?;
    let beta = r.beta.0 as f64 / r.beta.1 as f64;
    Ok((beta, r.alpha.iter().map(|&a| a as f64 / r.den as f64).collect()))
}

/// Time discretization for `steps` uniform steps of BDF-`s`. The unknowns are
/// the states `u_s, ..., u_steps`, so the matrices have `steps - s + 1` rows.
#[derive(Clone, Debug)]
pub struct TimeOperator {
    pub s: usize,
    pub steps: usize,
    pub tau: f64,
    pub beta: f64,
    pub alpha: Vec<f64>,
    /// Eigenvalues of `C_s`, `fft(C_s e_1)`.
    pub pi: Vec<Complex64>,
    plan: FftPlan,
}

pub fn build_time_operator(steps: usize, s: usize, tau: f64) -> Result<TimeOperator, TimeOpError> {
    let (beta, alpha) = bdf_coefficients(s)?;
    let cols = (steps + 1).saturating_sub(s);
    if cols <= s {
        return Err(TimeOpError::TooFewSteps { steps, s, cols });
    }
    let plan = FftPlan::new(cols);
    let mut c = vec![Complex64::new(0.0, 0.0); cols];
    for (j, &a) in alpha.iter().enumerate() {
        c[j + 1] = Complex64::new(a, 0.0);
    }
    plan.forward(&mut c);
    Ok(TimeOperator { s, steps, tau, beta, alpha, pi: c, plan })
}

impl TimeOperator {
    /// Number of unknown time columns `L`.
    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    /// Index of the first unknown state, so column `k` (1-based) is `u_{offset + k}`.
    pub fn offset(&self) -> usize {
        self.s - 1
    }

    /// `τβ`.
    pub fn tau_beta(&self) -> f64 {
        self.tau * self.beta
    }

    /// `Σ_j α_j Σ_j`, dense.
    pub fn sigma(&self) -> DMatrix<f64> {
        let l = self.dim();
        let mut m = DMatrix::zeros(l, l);
        for (j, &a) in self.alpha.iter().enumerate() {
            for k in 0..l.saturating_sub(j + 1) {
                m[(k + j + 1, k)] = a;
            }
        }
        m
    }

    /// `C_s`, dense.
    pub fn circulant(&self) -> DMatrix<f64> {
        let l = self.dim();
        let mut m = DMatrix::zeros(l, l);
        for (j, &a) in self.alpha.iter().enumerate() {
            for k in 0..l {
                m[((k + j + 1) % l, k)] = a;
            }
        }
        m
    }

    /// Upper triangular Toeplitz `𝛂_s` with diagonal `α_s` and first row `(α_s, ..., α_1)`.
    pub fn alpha_block(&self) -> DMatrix<f64> {
        let s = self.s;
        DMatrix::from_fn(s, s, |i, j| if j >= i { self.alpha[s - 1 - (j - i)] } else { 0.0 })
    }
}
