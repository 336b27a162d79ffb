use std::time::Instant;

use evosylv::discretization::presets::{preset, PresetParams};
use evosylv::discretization::{discretize_with, DiscretizationError, Discretized, RhsOptions};
use evosylv::oracles::{dense_kron_solve, relative_error, sample_exact, timestep_solve, OracleError};
use evosylv::solver::{solve_eksm, solve_eksm_separable, solve_rksm, Method, SolveError, SolveReport, SolverOptions};
use nalgebra::DMatrix;
use thiserror::Error;

use crate::config::{ConfigError, MethodChoice, RunConfig, Separable};

/// Largest `n^d L` for which the time-stepping reference is computed
/// alongside a Krylov run.
pub const ORACLE_LIMIT: usize = 20_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("discretization failed: {0}")]
    Discretization(#[from] DiscretizationError),
    #[error("solver failed: {0}")]
    Solve(#[from] SolveError),
    #[error("oracle failed: {0}")]
    Oracle(#[from] OracleError),
}

/// Memory formula inputs of a Krylov run.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryDetail {
    pub method: Method,
    pub m: usize,
    /// `q` for the full methods, `p_i` per direction on the tensor path.
    pub ranks: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub l: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub preset: String,
    pub d: usize,
    pub n: usize,
    pub ell: usize,
    pub s: usize,
    /// `eksm-tensor` when the separable path ran.
    pub method: String,
    pub inner: Option<String>,
    pub iterations: Option<usize>,
    pub final_residual: Option<f64>,
    pub wall_time_s: f64,
    pub memory_units: Option<u64>,
    pub error_vs_oracle: Option<f64>,
    pub error_vs_analytic: Option<f64>,
    pub converged: bool,
    pub memory: Option<MemoryDetail>,
}

fn discretize_config(cfg: &RunConfig) -> Result<Discretized, RunError> {
    let params = PresetParams { n: cfg.n, ell: cfg.ell, s: cfg.s, epsilon: cfg.epsilon, d: cfg.d };
    let spec = preset(&cfg.preset, &params)?;
    if cfg.s > 1 && spec.history_fn().is_none() {
        log::warn!("{} has no closed-form history; BDF{} starting values come from lower-order steps", cfg.preset, cfg.s);
    }
    Ok(discretize_with(spec, RhsOptions { startup_fallback: true })?)
}

fn use_tensor(cfg: &RunConfig, d: &Discretized) -> Result<bool, RunError> {
    let eligible = d.rhs.separable.is_some() && d.op.d >= 2 && cfg.s == 1;
    match (cfg.method, cfg.separable) {
        (MethodChoice::Eksm, Separable::On) if !eligible => Err(ConfigError::Inconsistent(format!(
            "separable=on but {} has no separable data at s={} (needs d >= 2, s = 1, zero boundary data)",
            cfg.preset, cfg.s
        ))
        .into()),
        (MethodChoice::Eksm, Separable::On) => Ok(true),
        (MethodChoice::Eksm, Separable::Auto) => Ok(eligible),
        _ => Ok(false),
    }
}

/// Discretizes, solves and measures one configuration. A run that stops
/// without converging still yields a record with `converged = false`.
pub fn run(cfg: &RunConfig) -> Result<RunRecord, RunError> {
    let d = discretize_config(cfg)?;
    let dim = d.op.d;
    let nd = d.op.dim();
    let l = d.timeop.dim();
    let opts = SolverOptions { tol: cfg.tol, m_max: cfg.m_max, inner: cfg.inner, seed: cfg.seed };
    log::info!("{} d={dim} n={} ell={} s={} method={}", cfg.preset, cfg.n, cfg.ell, cfg.s, cfg.method.name());

    let start = Instant::now();
    let (u, report): (DMatrix<f64>, Option<SolveReport>) = match cfg.method {
        MethodChoice::TimestepOracle => (timestep_solve(&d.op, &d.rhs, &d.timeop)?.u, None),
        MethodChoice::DenseOracle => (dense_kron_solve(&d.op, &d.rhs, &d.timeop)?.u, None),
        MethodChoice::Eksm if use_tensor(cfg, &d)? => {
            let (sol, rep) = solve_eksm_separable(&d.op, d.rhs.separable.as_ref().expect("checked"), &d.timeop, &opts)?;
            (sol.to_dense(), Some(rep))
        }
        MethodChoice::Eksm => {
            let (sol, rep) = solve_eksm(&d.op, &d.rhs, &d.timeop, &opts)?;
            (sol.to_dense(), Some(rep))
        }
        MethodChoice::Rksm => {
            use_tensor(cfg, &d)?;
            let (sol, rep) = solve_rksm(&d.op, &d.rhs, &d.timeop, &opts)?;
            (sol.to_dense(), Some(rep))
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let error_vs_oracle = match cfg.method {
        MethodChoice::TimestepOracle => None,
        _ if nd * l > ORACLE_LIMIT => {
            log::info!("skipping the time-stepping reference ({} unknowns)", nd * l);
            None
        }
        _ => Some(relative_error(&u, &timestep_solve(&d.op, &d.rhs, &d.timeop)?.u)),
    };
    let error_vs_analytic = sample_exact(&d.spec).map(|exact| relative_error(&u, &exact.u));

    let method = match &report {
        Some(r) => r.method.name().to_string(),
        None => cfg.method.name().to_string(),
    };
    Ok(RunRecord {
        preset: cfg.preset.clone(),
        d: dim,
        n: cfg.n,
        ell: cfg.ell,
        s: cfg.s,
        method,
        inner: report.as_ref().map(|r| r.inner_solver.name().to_string()),
        iterations: report.as_ref().map(|r| r.iterations),
        final_residual: report.as_ref().map(SolveReport::final_residual),
        wall_time_s,
        memory_units: report.as_ref().map(|r| r.memory_units),
        error_vs_oracle,
        error_vs_analytic,
        converged: report.as_ref().is_none_or(|r| r.converged),
        memory: report.as_ref().map(|r| MemoryDetail { method: r.method, m: r.iterations, ranks: r.start_ranks.clone(), n: cfg.n, d: dim, l }),
    })
}
