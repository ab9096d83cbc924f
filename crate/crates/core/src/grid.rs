//! Uniform grids on [0, 1] and grid-sampled functions.
//!
//! A [`GridFunction`] carries values on a uniform grid plus optional metadata
//! recording a known multiplicative endpoint power: `f(s) = d(s)^p * q(s)`
//! with `d` the distance to the tagged endpoint and `q` smooth. The quadrature
//! kernels in [`crate::quad`] use the metadata to keep full order of accuracy
//! at weakly singular endpoints.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Endpoint of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

/// A known multiplicative power singularity at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularExponent {
    pub endpoint: Endpoint,
    pub exponent: f64,
}

impl SingularExponent {
    pub fn left(exponent: f64) -> Self {
        SingularExponent {
            endpoint: Endpoint::Left,
            exponent,
        }
    }

    pub fn right(exponent: f64) -> Self {
        SingularExponent {
            endpoint: Endpoint::Right,
            exponent,
        }
    }
}

/// Uniform grid on [0, 1]: `m` nodes, first node 0, last node 1.
#[derive(Debug, PartialEq)]
pub struct Grid {
    len: usize,
    step: f64,
}

/// Default number of grid nodes.
pub const DEFAULT_GRID_LEN: usize = 1024;

impl Grid {
    pub fn new(len: usize) -> Result<Arc<Grid>> {
        if len < 8 {
            return Err(Error::GridMismatch(format!(
                "grid needs at least 8 nodes, got {len}"
            )));
        }
        Ok(Arc::new(Grid {
            len,
            step: 1.0 / (len - 1) as f64,
        }))
    }

    pub fn default_grid() -> Arc<Grid> {
        Grid::new(DEFAULT_GRID_LEN).expect("default grid size is valid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Panel width.
    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of panels (`len - 1`).
    #[inline]
    pub fn panels(&self) -> usize {
        self.len - 1
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.len - 1 {
            1.0
        } else {
            i as f64 * self.step
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.node(i))
    }
}

/// A real function on [0, 1] sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    singular_exponent: Option<SingularExponent>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::GridMismatch(format!("non-finite value {v}")));
        }
        Ok(GridFunction {
            grid,
            values,
            singular_exponent: None,
        })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(&f).collect();
        GridFunction::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        GridFunction {
            grid,
            values,
            singular_exponent: None,
        }
    }

    pub fn with_singularity(mut self, s: SingularExponent) -> Self {
        self.singular_exponent = if s.exponent.abs() < 1e-12 {
            None
        } else {
            Some(s)
        };
        self
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn singular_exponent(&self) -> Option<SingularExponent> {
        self.singular_exponent
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Evaluate at an arbitrary point by 4-point Lagrange interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        let h = g.step();
        let x = x.clamp(0.0, 1.0);
        // base index of the 4-node stencil
        let j = ((x / h) as usize).min(n - 2);
        let b = j.saturating_sub(1).min(n - 4);
        let t = (x - g.node(b)) / h;
        let f = &self.values[b..b + 4];
        // Lagrange cubic at offsets 0,1,2,3
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
    }

    /// Write as CSV rows `node,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_nodes_cover_unit_interval() {
        let g = Grid::new(9).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(8), 1.0);
        assert_abs_diff_eq!(g.node(4), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        let g = Grid::new(16).unwrap();
        assert!(GridFunction::new(g.clone(), vec![0.0; 5]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = Grid::new(32).unwrap();
        let f = GridFunction::from_fn(g, |x| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x).unwrap();
        for &x in &[0.0, 0.013, 0.5, 0.777, 0.999, 1.0] {
            let exact = 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
            assert_abs_diff_eq!(f.eval(x), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn interpolation_error_is_fourth_order() {
        let g = Grid::new(256).unwrap();
        let f = GridFunction::from_fn(g, |x| (3.0 * x).sin()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..1000 {
            let x = k as f64 / 999.0;
            worst = worst.max((f.eval(x) - (3.0 * x).sin()).abs());
        }
        assert!(worst < 1e-8, "worst interp error {worst}");
    }
}
