use std::io::{self, Write};

use evosylv::discretization::presets::{preset, PresetParams};

use crate::config::{ConfigError, RunConfig, Sweep};
use crate::run::{RunError, RunRecord};

pub const SPACE_POINTS: [usize; 4] = [33, 65, 129, 257];
pub const TIME_POINTS: [usize; 4] = [16, 32, 64, 128];
/// `ℓ` for a space sweep and `n` for a time sweep when not given.
pub const SPACE_SWEEP_ELL: usize = 4096;
pub const TIME_SWEEP_N: usize = 8193;

#[derive(Clone, Debug)]
pub struct Study {
    pub sweep: Sweep,
    /// `(h or τ, relative error)` per point.
    pub table: Vec<(f64, f64)>,
    pub slope: f64,
    pub records: Vec<RunRecord>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Refines `n` or `ℓ` of `base` and fits the observed order against the
/// closed-form solution. Points run in parallel on `jobs` threads; the
/// table keeps the order of `points`.
pub fn convergence_study(base: &RunConfig, sweep: Sweep, points: &[usize], jobs: usize) -> Result<Study, RunError> {
    let configs: Vec<RunConfig> = points
        .iter()
        .map(|&p| match sweep {
            Sweep::Space => RunConfig { n: p, ..base.clone() },
            Sweep::Time => RunConfig { ell: p, ..base.clone() },
        })
        .collect();
    let records = crate::run_all(&configs, jobs)?;
    let mut table = Vec::new();
    for (cfg, rec) in configs.iter().zip(&records) {
        let err = rec
            .error_vs_analytic
            .ok_or_else(|| ConfigError::Inconsistent(format!("{} has no closed-form solution to measure against", cfg.preset)))?;
        let params = PresetParams { n: cfg.n, ell: cfg.ell, s: cfg.s, epsilon: cfg.epsilon, d: cfg.d };
        let grid = preset(&cfg.preset, &params)?.grid;
        let step = match sweep {
            Sweep::Space => grid.h(0),
            Sweep::Time => grid.tau(),
        };
        table.push((step, err));
    }
    let slope = loglog_slope(&table);
    Ok(Study { sweep, table, slope, records })
}

pub fn write_table<W: Write>(study: &Study, mut out: W) -> io::Result<()> {
    let label = match study.sweep {
        Sweep::Space => "h",
        Sweep::Time => "tau",
    };
    writeln!(out, "{label:>14} {:>14}", "rel. error")?;
    for (x, e) in &study.table {
        writeln!(out, "{x:>14.6e} {e:>14.6e}")?;
    }
    writeln!(out, "fitted slope: {:.4}", study.slope)
}

/// Whitespace-separated `(step, error)` pairs with a comment header.
pub fn write_plot_data<W: Write>(study: &Study, mut out: W) -> io::Result<()> {
    writeln!(out, "# {} error", if study.sweep == Sweep::Space { "h" } else { "tau" })?;
    for (x, e) in &study.table {
        writeln!(out, "{x:e} {e:e}")?;
    }
    Ok(())
}
