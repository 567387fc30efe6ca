//! Problem data: coefficients, obstacles, and the assembled instance.

use crate::error::{Error, Result};
use crate::grid::{FractionalOrder, GridSpec, ScalarField};

/// Drift b, zero-order coefficient c, and the constant lower bound c0 with
/// min c >= c0 >= 0. Operations that need uniqueness (anything that solves)
/// additionally require c0 > 0.
#[derive(Clone, Debug)]
pub struct CoefficientSpec {
    b: ScalarField,
    c: ScalarField,
    c0: f64,
}

impl CoefficientSpec {
    pub fn new(b: ScalarField, c: ScalarField, c0: f64) -> Result<Self> {
        if b.grid() != c.grid() {
            return Err(Error::InvalidParam(
                "b and c must live on the same grid".into(),
            ));
        }
        if !(c0 >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "c0 must be nonnegative, got {c0}"
            )));
        }
        let cmin = c.values().iter().cloned().fold(f64::INFINITY, f64::min);
        if cmin < c0 {
            return Err(Error::InvalidParam(format!(
                "min c = {cmin} is below the declared lower bound c0 = {c0}"
            )));
        }
        Ok(Self { b, c, c0 })
    }

    /// Constant drift and zero-order term; c0 defaults to c itself.
    pub fn constant(grid: GridSpec, b: f64, c: f64) -> Result<Self> {
        Self::new(
            ScalarField::from_fn(grid, |_| b),
            ScalarField::from_fn(grid, |_| c),
            c,
        )
    }

    pub fn b(&self) -> &ScalarField {
        &self.b
    }

    pub fn c(&self) -> &ScalarField {
        &self.c
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn has_drift(&self) -> bool {
        self.b.max_abs() > 0.0
    }
}

/// One obstacle-problem instance on a box with zero far-field data.
///
/// The obstacle's positive part must vanish (to `decay_tol`) on the outer
/// 10% of the box: the nonlocal operators treat data as periodic, and an
/// obstacle pushing the solution up near the edge would couple the two
/// ends of the box. Negative values near the edge are inert (u ≥ 0 never
/// touches them) and are allowed.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    order: FractionalOrder,
    grid: GridSpec,
    coeffs: CoefficientSpec,
    obstacle: ScalarField,
}

pub const OBSTACLE_DECAY_TOL: f64 = 1e-6;

impl ProblemSpec {
    pub fn new(
        order: FractionalOrder,
        coeffs: CoefficientSpec,
        obstacle: ScalarField,
    ) -> Result<Self> {
        let grid = obstacle.grid();
        if coeffs.b().grid() != grid {
            return Err(Error::InvalidParam(
                "coefficients and obstacle must live on the same grid".into(),
            ));
        }
        let band = 0.9 * grid.half_width();
        let edge_max = grid
            .nodes()
            .zip(obstacle.values())
            .filter(|(x, _)| x.abs() >= band)
            .fold(0.0_f64, |m, (_, &v)| m.max(v));
        if edge_max > OBSTACLE_DECAY_TOL {
            return Err(Error::InvalidParam(format!(
                "obstacle reaches +{edge_max:.2e} on the outer 10% of the box; \
                 enlarge the box or shrink the obstacle"
            )));
        }
        Ok(Self {
            order,
            grid,
            coeffs,
            obstacle,
        })
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &CoefficientSpec {
        &self.coeffs
    }

    pub fn obstacle(&self) -> &ScalarField {
        &self.obstacle
    }
}

/// Smooth compactly supported bump: amp * exp(-1/(1-t^2)) for |t| < 1 with
/// t = (x-center)/width, zero outside. Peak value is amp/e.
pub fn bump(center: f64, width: f64, amp: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| {
        let t = (x - center) / width;
        if t.abs() < 1.0 {
            amp * (-1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    }
}

/// Named obstacles used by the scenario harness and the acceptance suite.
pub fn named_obstacle(name: &str, grid: GridSpec) -> Result<ScalarField> {
    let f: Box<dyn Fn(f64) -> f64> = match name {
        "bump" => Box::new(bump(0.0, 2.0, 1.0)),
        "shifted-bump" => Box::new(bump(1.5, 2.0, 1.0)),
        "two-bumps" => {
            let a = bump(-2.5, 1.5, 1.0);
            let b = bump(2.5, 1.5, 0.8);
            Box::new(move |x| a(x) + b(x))
        }
        "negative" => Box::new(move |x| -0.5 * bump(0.0, 2.0, 1.0)(x)),
        _ => {
            return Err(Error::InvalidParam(format!(
                "unknown obstacle '{name}' (expected bump, shifted-bump, two-bumps, negative)"
            )))
        }
    };
    Ok(ScalarField::from_fn(grid, |x| f(x)))
}
