//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use evosylv::discretization::presets::PRESET_NAMES;
use evosylv::solver::InnerSolver;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("line {line} of the config file is not `key = value`")]
    Syntax { line: usize },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Eksm,
    Rksm,
    TimestepOracle,
    DenseOracle,
}

impl MethodChoice {
    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::Eksm => "eksm",
            MethodChoice::Rksm => "rksm",
            MethodChoice::TimestepOracle => "timestep-oracle",
            MethodChoice::DenseOracle => "dense-oracle",
        }
    }

    pub fn is_oracle(self) -> bool {
        matches!(self, MethodChoice::TimestepOracle | MethodChoice::DenseOracle)
    }
}

impl FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eksm" => Ok(MethodChoice::Eksm),
            "rksm" => Ok(MethodChoice::Rksm),
            "timestep-oracle" => Ok(MethodChoice::TimestepOracle),
            "dense-oracle" => Ok(MethodChoice::DenseOracle),
            _ => Err("expected eksm, rksm, timestep-oracle or dense-oracle".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separable {
    Auto,
    On,
    Off,
}

impl FromStr for Separable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Separable::Auto),
            "on" => Ok(Separable::On),
            "off" => Ok(Separable::Off),
            _ => Err("expected auto, on or off".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Space,
    Time,
}

impl FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "space" => Ok(Sweep::Space),
            "time" => Ok(Sweep::Time),
            _ => Err("expected space or time".into()),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sweep::Space => "space",
            Sweep::Time => "time",
        })
    }
}

/// One solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    /// Only read by `custom`; the other presets fix their dimension.
    pub d: usize,
    pub n: usize,
    pub ell: usize,
    pub s: usize,
    pub method: MethodChoice,
    pub inner: InnerSolver,
    pub separable: Separable,
    pub tol: f64,
    pub m_max: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: "example1".into(),
            d: 2,
            n: 64,
            ell: 256,
            s: 1,
            method: MethodChoice::Eksm,
            inner: InnerSolver::FftSmw,
            separable: Separable::Auto,
            tol: 1e-8,
            m_max: 60,
            epsilon: 1.0,
            seed: 0,
        }
    }
}

/// Everything a command line can ask for: a grid of runs or a study.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub base: RunConfig,
    /// Values of `n` and `ℓ`; the runs are their product.
    pub ns: Vec<usize>,
    pub ells: Vec<usize>,
    pub output: Option<PathBuf>,
    pub sweep: Option<Sweep>,
    /// Refinement levels for a study; the swept quantity.
    pub points: Option<Vec<usize>>,
    pub jobs: usize,
    pub plot_data: Option<PathBuf>,
    /// Whether `n` / `ℓ` were given explicitly.
    pub n_given: bool,
    pub ell_given: bool,
}

pub const KEYS: [&str; 18] = [
    "preset", "d", "n", "ell", "s", "method", "inner", "separable", "tol", "mmax", "epsilon", "out", "seed", "sweep", "points", "jobs",
    "plot-data", "config",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = k.trim().replace('_', "-");
        let key = if key == "m-max" { "mmax".to_string() } else { key };
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(ConfigError::UnknownKey(key));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

impl Settings {
    /// Builds settings from merged key/value pairs, validating each value
    /// and the combination.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut base = RunConfig::default();
        let mut s = Settings {
            base: base.clone(),
            ns: vec![base.n],
            ells: vec![base.ell],
            output: None,
            sweep: None,
            points: None,
            jobs: 1,
            plot_data: None,
            n_given: false,
            ell_given: false,
        };
        for (key, value) in map {
            let v = value.as_str();
            match key.as_str() {
                "preset" => {
                    if !PRESET_NAMES.contains(&v) {
                        return Err(invalid(key, v, &format!("expected one of {}", PRESET_NAMES.join(", "))));
                    }
                    base.preset = v.to_string();
                }
                "d" => base.d = parse(key, v)?,
                "n" => {
                    s.ns = parse_list(key, v)?;
                    s.n_given = true;
                }
                "ell" => {
                    s.ells = parse_list(key, v)?;
                    s.ell_given = true;
                }
                "s" => base.s = parse(key, v)?,
                "method" => base.method = parse(key, v)?,
                "inner" => base.inner = parse(key, v)?,
                "separable" => base.separable = parse(key, v)?,
                "tol" => base.tol = parse(key, v)?,
                "mmax" => base.m_max = parse(key, v)?,
                "epsilon" => base.epsilon = parse(key, v)?,
                "seed" => base.seed = parse(key, v)?,
                "out" => s.output = Some(PathBuf::from(v)),
                "sweep" => s.sweep = Some(parse(key, v)?),
                "points" => s.points = Some(parse_list(key, v)?),
                "jobs" => s.jobs = parse(key, v)?,
                "plot-data" => s.plot_data = Some(PathBuf::from(v)),
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        s.base = base;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let b = &self.base;
        if !(1..=6).contains(&b.s) {
            return Err(invalid("s", &b.s.to_string(), "BDF order must be 1..6"));
        }
        if !(1..=3).contains(&b.d) {
            return Err(invalid("d", &b.d.to_string(), "dimension must be 1..3"));
        }
        if !(b.tol > 0.0 && b.tol < 1.0) {
            return Err(invalid("tol", &b.tol.to_string(), "must lie in (0, 1)"));
        }
        if b.m_max == 0 {
            return Err(invalid("mmax", "0", "must be positive"));
        }
        if !(b.epsilon > 0.0) {
            return Err(invalid("epsilon", &b.epsilon.to_string(), "must be positive"));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs", "0", "must be positive"));
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < 3) {
            return Err(invalid("n", &n.to_string(), "need at least 3 nodes per direction"));
        }
        if let Some(l) = self.ells.iter().find(|&&l| l <= 2 * b.s) {
            return Err(invalid("ell", &l.to_string(), "need more than 2s time steps"));
        }
        if b.separable == Separable::On && b.method != MethodChoice::Eksm {
            return Err(ConfigError::Inconsistent("separable=on requires method=eksm".into()));
        }
        if let Some(sweep) = self.sweep {
            if b.method.is_oracle() {
                return Err(ConfigError::Inconsistent("a convergence study needs method eksm or rksm".into()));
            }
            if self.points.as_ref().is_some_and(|p| p.len() < 2) {
                return Err(invalid("points", "", "a study needs at least two points"));
            }
            if sweep == Sweep::Space && self.ns.len() > 1 || sweep == Sweep::Time && self.ells.len() > 1 {
                return Err(ConfigError::Inconsistent(format!("the {sweep} sweep sets its own refinement; use --points")));
            }
        } else if self.points.is_some() || self.plot_data.is_some() {
            return Err(ConfigError::Inconsistent("points and plot-data need a sweep".into()));
        }
        Ok(())
    }

    /// The runs of a grid, in `(n, ℓ)` order.
    pub fn runs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &ell in &self.ells {
                out.push(RunConfig { n, ell, ..self.base.clone() });
            }
        }
        out
    }
}
