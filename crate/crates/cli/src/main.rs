//! `evosylv`: runs the all-at-once solvers on the benchmark presets and
//! writes one CSV row per run.

mod config;
mod report;
mod run;
mod study;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;

use config::{parse_kv, ConfigError, RunConfig, Settings, Sweep};
use run::{RunError, RunRecord};

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "evosylv", version, about = "All-at-once space-time solvers for the heat and convection-diffusion presets")]
struct Args {
    /// example1 | example2 | example2_1 | example3 | example4 | custom
    #[arg(long)]
    preset: Option<String>,
    /// Nodes per direction; a comma list runs each value.
    #[arg(long)]
    n: Option<String>,
    /// Time steps; a comma list runs each value.
    #[arg(long)]
    ell: Option<String>,
    /// BDF order, 1..6.
    #[arg(long)]
    s: Option<String>,
    /// Space dimension of the custom preset.
    #[arg(long)]
    d: Option<String>,
    /// eksm | rksm | timestep-oracle | dense-oracle
    #[arg(long)]
    method: Option<String>,
    /// fft_smw | sequential
    #[arg(long)]
    inner: Option<String>,
    /// Tensorized EKSM: auto | on | off
    #[arg(long)]
    separable: Option<String>,
    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Maximum outer iterations.
    #[arg(long)]
    mmax: Option<String>,
    /// Viscosity for example3.
    #[arg(long)]
    epsilon: Option<String>,
    /// CSV output file (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Convergence study: space | time
    #[arg(long)]
    sweep: Option<String>,
    /// Refinement levels of a study (n for space, ℓ for time), comma separated.
    #[arg(long)]
    points: Option<String>,
    /// Threads for independent runs.
    #[arg(long)]
    jobs: Option<String>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write `(step, error)` pairs of a study to this file.
    #[arg(long = "plot-data")]
    plot_data: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("preset", &self.preset),
            ("n", &self.n),
            ("ell", &self.ell),
            ("s", &self.s),
            ("d", &self.d),
            ("method", &self.method),
            ("inner", &self.inner),
            ("separable", &self.separable),
            ("tol", &self.tol),
            ("mmax", &self.mmax),
            ("epsilon", &self.epsilon),
            ("out", &self.out),
            ("seed", &self.seed),
            ("sweep", &self.sweep),
            ("points", &self.points),
            ("jobs", &self.jobs),
            ("plot-data", &self.plot_data),
        ]
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Run(RunError::Config(e))
    }
}

fn settings(args: &Args) -> Result<Settings, CliError> {
    let mut map = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in args.overrides() {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    Ok(Settings::from_map(&map)?)
}

/// Runs every configuration on `jobs` threads, keeping the input order.
pub(crate) fn run_all(configs: &[RunConfig], jobs: usize) -> Result<Vec<RunRecord>, RunError> {
    if jobs <= 1 {
        return configs.iter().map(run::run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| configs.par_iter().map(run::run).collect())
}

fn emit(records: &[RunRecord], out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            report::write_csv(records, BufWriter::new(File::create(path)?))?;
            report::write_summary(records, io::stdout().lock())?;
        }
        None => {
            report::write_csv(records, io::stdout().lock())?;
            report::write_summary(records, io::stderr().lock())?;
        }
    }
    Ok(())
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let s = settings(args)?;
    let records = match s.sweep {
        None => run_all(&s.runs(), s.jobs)?,
        Some(sweep) => {
            let mut base = s.base.clone();
            base.n = if sweep == Sweep::Time && !s.n_given { study::TIME_SWEEP_N } else { s.ns[0] };
            base.ell = if sweep == Sweep::Space && !s.ell_given { study::SPACE_SWEEP_ELL } else { s.ells[0] };
            let default: &[usize] = match sweep {
                Sweep::Space => &study::SPACE_POINTS,
                Sweep::Time => &study::TIME_POINTS,
            };
            let points = s.points.clone().unwrap_or_else(|| default.to_vec());
            let st = study::convergence_study(&base, sweep, &points, s.jobs)?;
            let mut out = io::stderr().lock();
            writeln!(out, "{sweep} convergence study, {} s={} method={}", base.preset, base.s, base.method.name())?;
            study::write_table(&st, &mut out)?;
            if let Some(path) = &s.plot_data {
                study::write_plot_data(&st, BufWriter::new(File::create(path)?))?;
            }
            st.records
        }
    };
    emit(&records, &s.output)?;
    Ok(records.iter().all(|r| r.converged))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVOSYLV_LOG", "warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one run did not reach the tolerance");
            ExitCode::from(EXIT_NO_CONVERGENCE)
        }
        Err(e @ CliError::Run(RunError::Config(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
