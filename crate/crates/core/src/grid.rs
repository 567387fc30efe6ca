//! Uniform 1-D grids and the scalar fields that live on them.
//!
//! Every solver in this crate works on a symmetric box [-R, R] sampled at
//! n equispaced nodes, n odd so the origin is a node. Nonlocal operators
//! treat the box periodically, so index n-1 is an alias of index 0 and
//! periodic code must keep the two endpoint values in sync.

use crate::error::{Error, Result};

/// Fractional differentiation order s, restricted to (1/2, 1).
///
/// The lower bound keeps the associated extension weight |y|^a with
/// a = 1 - 2s integrable near y = 0; the upper bound keeps the operator
/// genuinely nonlocal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalOrder {
    s: f64,
}

impl FractionalOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.5 && s < 1.0) {
            return Err(Error::InvalidParam(format!(
                "order s must lie in (0.5, 1), got {s}"
            )));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Extension weight exponent a = 1 - 2s, in (-1, 0).
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    /// Stability index of the matching jump process, 2s in (1, 2).
    pub fn stable_index(&self) -> f64 {
        2.0 * self.s
    }
}

/// Symmetric uniform grid on [-half_width, half_width] with n nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidParam(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParam(format!(
                "n must be odd and at least 3 so the origin is a node, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing 2R/(n-1).
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Coordinate of node i.
    pub fn x(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        -self.half_width + i as f64 * self.h()
    }

    /// Index of the node at the origin.
    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Nearest node to x (clamped to the box).
    pub fn nearest(&self, x: f64) -> usize {
        let t = (x + self.half_width) / self.h();
        (t.round().max(0.0) as usize).min(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Indices at least `margin` inside the box; residual checks live here
    /// because one-sided stencils pollute the outermost nodes.
    pub fn interior(&self, margin: f64) -> impl Iterator<Item = usize> + '_ {
        let r = self.half_width - margin;
        (0..self.n).filter(move |&i| self.x(i).abs() <= r)
    }
}

/// Samples of a scalar function at the nodes of a grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n(), "field length must match grid");
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::new(grid, vec![0.0; grid.n()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Piecewise-linear evaluation at x, clamped to the box.
    pub fn interp(&self, x: f64) -> f64 {
        let g = self.grid;
        let t = ((x + g.half_width()) / g.h()).clamp(0.0, (g.n() - 1) as f64);
        let i = (t.floor() as usize).min(g.n() - 2);
        let w = t - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields must share a grid");
        let v = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, v)
    }
}

/// First derivative: central differences inside, one-sided at the two ends.
pub fn gradient(u: &ScalarField) -> ScalarField {
    let n = u.grid().n();
    let h = u.grid().h();
    let v = u.values();
    let mut g = vec![0.0; n];
    g[0] = (v[1] - v[0]) / h;
    g[n - 1] = (v[n - 1] - v[n - 2]) / h;
    for i in 1..n - 1 {
        g[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    ScalarField::new(u.grid(), g)
}
