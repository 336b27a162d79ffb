//! Adaptive real shifts for the rational Krylov space.
//!
//! `K̄` has its spectrum in the right half-plane, so poles are placed at
//! `-s` with `s` in the mirrored interval `[s_min, s_max]`. The next `s`
//! maximizes `Π |z - s_j| / Π |z + θ_i|` over that interval, where `s_j` are
//! the magnitudes already used and `θ_i` the current Ritz values.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::kernels::{BandedLu, SparseMatrix};

#[derive(Clone, Debug, Default)]
pub struct ShiftState {
    pub s_min: f64,
    pub s_max: f64,
    /// Shift magnitudes with the width of the block each produced.
    pub used: Vec<(f64, usize)>,
    pub ritz: Vec<Complex64>,
}

impl ShiftState {
    pub fn new(s_min: f64, s_max: f64) -> Self {
        Self { s_min, s_max, used: Vec::new(), ritz: Vec::new() }
    }

    /// `ln(1/|r(z)|)`.
    pub fn objective(&self, z: f64) -> f64 {
        let num: f64 = self.used.iter().map(|&(s, m)| m as f64 * (z - s).abs().ln()).sum();
        let den: f64 = self.ritz.iter().map(|&t| (Complex64::new(z, 0.0) + t).norm().ln()).sum();
        num - den
    }
}

/// Next shift magnitude in `[s_min, s_max]`; the first one is `s_min`.
pub fn next_shift(state: &ShiftState) -> f64 {
    let (lo, hi) = (state.s_min, state.s_max);
    if state.used.is_empty() || !(hi > lo) {
        return lo;
    }
    let m = 1000;
    let mut cand: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    if lo > 0.0 {
        let ratio = (hi / lo).ln();
        cand.extend((0..m).map(|i| lo * (ratio * i as f64 / (m - 1) as f64).exp()));
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let vals: Vec<f64> = cand.iter().map(|&z| state.objective(z)).collect();
    let best = (0..cand.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty grid");

    // golden-section refinement inside the neighbouring grid cells
    let (mut a, mut b) = (cand[best.saturating_sub(1)], cand[(best + 1).min(cand.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..60 {
        if state.objective(c) > state.objective(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let refined = 0.5 * (a + b);
    if state.objective(refined) > vals[best] {
        refined
    } else {
        cand[best]
    }
}

/// Rough `[s_min, s_max]` for one matrix: Gershgorin for the top, a few
/// inverse power steps for the bottom.
pub fn matrix_bounds(k: &SparseMatrix, lu: Option<&BandedLu>, seed: u64) -> (f64, f64) {
    let (g_lo, g_hi) = k.gershgorin();
    let owned;
    let lu = match lu {
        Some(l) => Some(l),
        None => {
            owned = BandedLu::factor(k, 0.0).ok();
            owned.as_ref()
        }
    };
    let mut s_min = g_lo;
    if let Some(lu) = lu {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut x = DMatrix::from_fn(k.nrows(), 1, |_, _| rng.gen_range(0.5..1.5));
        let mut est = f64::INFINITY;
        for _ in 0..12 {
            x /= x.norm();
            let y = lu.solve(&x);
            est = 1.0 / y.norm();
            x = y;
        }
        s_min = s_min.max(est);
    }
    let s_min = if s_min > 0.0 { s_min } else { f64::EPSILON * g_hi.abs().max(1.0) };
    (s_min, g_hi.max(s_min))
}

/// Bounds for a Kronecker sum: the 1D bounds add up.
pub fn kronecker_sum_bounds(factors: &[SparseMatrix], seed: u64) -> (f64, f64) {
    factors.iter().enumerate().fold((0.0, 0.0), |(lo, hi), (i, f)| {
        let (a, b) = matrix_bounds(f, None, seed.wrapping_add(i as u64));
        (lo + a, hi + b)
    })
}
