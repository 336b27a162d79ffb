use super::DiscretizationError;

/// Uniform space-time mesh on a box, endpoints included.
///
/// Nodes are numbered lexicographically with the first coordinate fastest:
/// node `(i_x, i_y, i_z)` has linear index `i_x + n i_y + n^2 i_z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub domain: Vec<(f64, f64)>,
    pub t_final: f64,
    pub ell: usize,
}

impl Grid {
    pub fn new(d: usize, n: usize, domain: Vec<(f64, f64)>, t_final: f64, ell: usize) -> Result<Self, DiscretizationError> {
        if !(1..=3).contains(&d) {
            return Err(DiscretizationError::UnsupportedDimension(d));
        }
        if domain.len() != d || domain.iter().any(|&(a, b)| !(b > a)) {
            return Err(DiscretizationError::InvalidGrid(format!("bad domain {domain:?} for d = {d}")));
        }
        if n < 3 || ell < 1 || !(t_final > 0.0) {
            return Err(DiscretizationError::InvalidGrid(format!("n = {n}, ell = {ell}, T = {t_final}")));
        }
        Ok(Self { d, n, domain, t_final, ell })
    }

    /// Same interval in every direction.
    pub fn cube(d: usize, n: usize, interval: (f64, f64), t_final: f64, ell: usize) -> Result<Self, DiscretizationError> {
        Self::new(d, n, vec![interval; d], t_final, ell)
    }

    pub fn h(&self, dim: usize) -> f64 {
        let (a, b) = self.domain[dim];
        (b - a) / (self.n - 1) as f64
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.ell as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_final * k as f64 / self.ell as f64
    }

    pub fn nodes(&self, dim: usize) -> Vec<f64> {
        let (a, _) = self.domain[dim];
        let h = self.h(dim);
        (0..self.n).map(|i| if i + 1 == self.n { self.domain[dim].1 } else { a + h * i as f64 }).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn coords(&self, mut idx: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for slot in c.iter_mut().take(self.d) {
            *slot = idx % self.n;
            idx /= self.n;
        }
        c
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().rev().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, idx: usize, nodes: &[Vec<f64>]) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for k in 0..self.d {
            x[k] = nodes[k][c[k]];
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.coords(idx)[..self.d].iter().any(|&i| i == 0 || i + 1 == self.n)
    }

    /// Number of coordinates of node `idx` that sit on the boundary.
    pub fn boundary_multiplicity(&self, idx: usize) -> usize {
        self.coords(idx)[..self.d].iter().filter(|&&i| i == 0 || i + 1 == self.n).count()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.is_boundary(i)).collect()
    }
}
