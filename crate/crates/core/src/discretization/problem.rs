use std::fmt;
use std::sync::Arc;

use super::functions::{Fn1, FnXt, SpaceFn, SpaceTime, Term};
use super::{DiscretizationError, Grid};

/// Wind field with separable components: `w_i(x) = Π_k c_ik(x_k)`.
#[derive(Clone)]
pub struct Wind {
    pub components: Vec<Vec<Fn1>>,
    /// Each `w_i` depends on `x_i` only, so the operator is a Kronecker sum.
    pub aligned: bool,
}

impl fmt::Debug for Wind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wind(d = {}, aligned = {})", self.components.len(), self.aligned)
    }
}

impl Wind {
    pub fn separable(components: Vec<Vec<Fn1>>) -> Self {
        Self { components, aligned: false }
    }

    /// `w = (f_1(x_1), ..., f_d(x_d))`.
    pub fn aligned(fs: Vec<Fn1>) -> Self {
        let d = fs.len();
        let one: Fn1 = Arc::new(|_| 1.0);
        let components = fs
            .into_iter()
            .enumerate()
            .map(|(i, f)| (0..d).map(|k| if k == i { f.clone() } else { one.clone() }).collect())
            .collect();
        Self { components, aligned: true }
    }

    pub fn zero(d: usize) -> Self {
        Self::aligned(vec![Arc::new(|_| 0.0) as Fn1; d])
    }
}

#[derive(Clone, Debug)]
pub enum PdeKind {
    /// `u_t = Δu + f`.
    Heat,
    /// `u_t = εΔu - w·∇u + f`.
    ConvectionDiffusion { epsilon: f64, wind: Wind },
}

/// A Dirichlet problem on a box, discretized by finite differences in space
/// and BDF-`s` in time.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub kind: PdeKind,
    pub grid: Grid,
    pub s: usize,
    pub u0: SpaceFn,
    pub source: SpaceTime,
    /// Boundary data `g`, only its values on boundary nodes are used.
    pub boundary: Vec<Term>,
    /// Closed-form solution, when known.
    pub exact: Option<FnXt>,
    /// States `u(t_1), ..., u(t_{s-1})` needed by BDF-`s`; falls back to `exact`.
    pub history: Option<FnXt>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("grid", &self.grid)
            .field("s", &self.s)
            .field("u0", &self.u0)
            .field("source", &self.source)
            .field("boundary_terms", &self.boundary.len())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn heat(name: &str, grid: Grid, u0: SpaceFn) -> Self {
        Self {
            name: name.to_string(),
            kind: PdeKind::Heat,
            grid,
            s: 1,
            u0,
            source: SpaceTime::zero(),
            boundary: Vec::new(),
            exact: None,
            history: None,
        }
    }

    pub fn validate(&self) -> Result<(), DiscretizationError> {
        let d = self.grid.d;
        if !(1..=3).contains(&d) {
            return Err(DiscretizationError::UnsupportedDimension(d));
        }
        if let PdeKind::ConvectionDiffusion { epsilon, wind } = &self.kind {
            if !(*epsilon > 0.0) {
                return Err(DiscretizationError::InvalidGrid(format!("viscosity must be positive, got {epsilon}")));
            }
            if wind.components.len() != d || wind.components.iter().any(|c| c.len() != d) {
                return Err(DiscretizationError::NonSeparableWind(format!(
                    "expected {d} components with {d} factors each"
                )));
            }
        }
        if let SpaceFn::Product(fs) = &self.u0 {
            if fs.len() != d {
                return Err(DiscretizationError::InvalidGrid("u0 factor count differs from d".into()));
            }
        }
        Ok(())
    }

    pub fn has_boundary_data(&self) -> bool {
        self.boundary.iter().any(|t| !t.space.is_zero())
    }

    pub fn history_fn(&self) -> Option<&FnXt> {
        self.history.as_ref().or(self.exact.as_ref())
    }
}
