//! Space and space-time data attached to a problem.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::Grid;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FnX = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type FnXt = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

pub fn fn1(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Fn1 {
    Arc::new(f)
}

/// A function of the space variables.
#[derive(Clone)]
pub enum SpaceFn {
    Zero,
    /// `Π_k f_k(x_k)`, one factor per direction, `x` first.
    Product(Vec<Fn1>),
    General(FnX),
    /// Nodal values on a specific grid, in grid order.
    Nodal(Arc<DVector<f64>>),
}

impl fmt::Debug for SpaceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceFn::Zero => write!(f, "Zero"),
            SpaceFn::Product(v) => write!(f, "Product({} factors)", v.len()),
            SpaceFn::General(_) => write!(f, "General"),
            SpaceFn::Nodal(v) => write!(f, "Nodal({})", v.len()),
        }
    }
}

impl SpaceFn {
    pub fn general(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SpaceFn::General(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SpaceFn::Zero)
    }

    pub fn sample(&self, grid: &Grid) -> DVector<f64> {
        let nodes: Vec<Vec<f64>> = (0..grid.d).map(|k| grid.nodes(k)).collect();
        match self {
            SpaceFn::Zero => DVector::zeros(grid.num_nodes()),
            SpaceFn::Nodal(v) => {
                assert_eq!(v.len(), grid.num_nodes(), "nodal data does not match the grid");
                (**v).clone()
            }
            SpaceFn::Product(fs) => {
                let vals: Vec<Vec<f64>> = fs.iter().zip(&nodes).map(|(f, x)| x.iter().map(|&v| f(v)).collect()).collect();
                DVector::from_fn(grid.num_nodes(), |idx, _| {
                    let c = grid.coords(idx);
                    (0..grid.d).map(|k| vals[k][c[k]]).product()
                })
            }
            SpaceFn::General(f) => DVector::from_fn(grid.num_nodes(), |idx, _| {
                let x = grid.point(idx, &nodes);
                f(&x[..grid.d])
            }),
        }
    }

    /// Per-direction samples when the function is a product.
    pub fn factor_samples(&self, grid: &Grid) -> Option<Vec<DVector<f64>>> {
        match self {
            SpaceFn::Product(fs) if fs.len() == grid.d => {
                Some(fs.iter().enumerate().map(|(k, f)| DVector::from_iterator(grid.n, grid.nodes(k).into_iter().map(|x| f(x)))).collect())
            }
            _ => None,
        }
    }
}

/// One separated term `a(x) b(t)`.
#[derive(Clone, Debug)]
pub struct Term {
    pub space: SpaceFn,
    pub time: TimeFn,
}

#[derive(Clone)]
pub struct TimeFn(pub Fn1);

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFn")
    }
}

impl Term {
    pub fn new(space: SpaceFn, time: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { space, time: TimeFn(Arc::new(time)) }
    }

    pub fn constant_in_time(space: SpaceFn) -> Self {
        Self::new(space, |_| 1.0)
    }
}

/// Space-time data, either as separated terms or as a general function that
/// is sampled and compressed.
#[derive(Clone)]
pub enum SpaceTime {
    Terms(Vec<Term>),
    General(FnXt),
}

impl fmt::Debug for SpaceTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTime::Terms(t) => f.debug_tuple("Terms").field(t).finish(),
            SpaceTime::General(_) => write!(f, "General"),
        }
    }
}

impl SpaceTime {
    pub fn zero() -> Self {
        SpaceTime::Terms(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SpaceTime::Terms(t) => t.iter().all(|t| t.space.is_zero()),
            SpaceTime::General(_) => false,
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            SpaceTime::Terms(terms) => terms
                .iter()
                .map(|term| {
                    let a = match &term.space {
                        SpaceFn::Zero => 0.0,
                        SpaceFn::Product(fs) => fs.iter().zip(x).map(|(f, &v)| f(v)).product(),
                        SpaceFn::General(f) => f(x),
                        SpaceFn::Nodal(_) => panic!("nodal data has no pointwise evaluation"),
                    };
                    a * (term.time.0)(t)
                })
                .sum(),
            SpaceTime::General(f) => f(x, t),
        }
    }
}
