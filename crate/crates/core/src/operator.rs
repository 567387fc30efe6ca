//! Two independent discretizations of (-Δ)^s on the periodic box: the
//! circulant singular-integral quadrature and the Fourier symbol |ξ|^{2s}.
//! Each serves as the oracle for the other.

use crate::error::{Error, Result};
use crate::grid::{FractionalOrder, GridSpec, ScalarField};
use crate::kernel::KernelTable;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::sync::Arc;

/// Warn when data the periodic transforms will wrap is visibly nonzero
/// near the box edge; results are still returned.
pub(crate) fn warn_if_not_decayed(u: &ScalarField, what: &str) {
    let g = u.grid();
    let band = 0.95 * g.half_width();
    let edge = g
        .nodes()
        .zip(u.values())
        .filter(|(x, _)| x.abs() >= band)
        .fold(0.0_f64, |m, (_, &v)| m.max(v.abs()));
    let scale = u.max_abs();
    if scale > 0.0 && edge > 1e-8 * scale {
        log::warn!(
            "{what}: data reaches {:.2e} of its peak near the box edge; \
             periodic wrap-around will pollute the result",
            edge / scale
        );
    }
}

/// Difference-form quadrature apply,
/// out_i = c_s Σ_{k=1}^{N/2} V_k (2u_i - u_{i+k} - u_{i-k}), indices mod N.
pub fn apply_quadrature(u: &ScalarField, table: &KernelTable) -> ScalarField {
    assert_eq!(u.grid(), table.grid(), "field and kernel table grids differ");
    let n = u.grid().n();
    let nn = n - 1;
    let v = &u.values()[..nn];
    let w = table.weights();
    let cns = table.cns();
    let mut out = vec![0.0; n];
    for i in 0..nn {
        let mut acc = 0.0;
        for k in 1..=nn / 2 {
            acc += w[k] * (2.0 * v[i] - v[(i + k) % nn] - v[(i + nn - k) % nn]);
        }
        out[i] = cns * acc;
    }
    out[nn] = out[0];
    ScalarField::new(u.grid(), out)
}

/// Fourier-side operator with cached FFT plans and symbol table.
pub struct SpectralOp {
    grid: GridSpec,
    order: FractionalOrder,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

impl SpectralOp {
    pub fn new(grid: GridSpec, order: FractionalOrder) -> Self {
        let nn = grid.n() - 1;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nn);
        let inv = planner.plan_fft_inverse(nn);
        let s = order.s();
        let r = grid.half_width();
        let symbol = (0..nn)
            .map(|idx| {
                let k = if idx <= nn / 2 {
                    idx as f64
                } else {
                    idx as f64 - nn as f64
                };
                (std::f64::consts::PI * k / r).abs().powf(2.0 * s)
            })
            .collect();
        Self {
            grid,
            order,
            fwd,
            inv,
            symbol,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    /// Transform, multiply each mode by `factor(symbol_k, k)`, transform back.
    fn filter(&self, u: &ScalarField, factor: impl Fn(f64, usize) -> f64) -> ScalarField {
        assert_eq!(u.grid(), self.grid, "field grid differs from operator grid");
        let nn = self.grid.n() - 1;
        let mut buf: Vec<Complex<f64>> = u.values()[..nn]
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        self.fwd.process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= factor(self.symbol[k], k);
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / nn as f64;
        let mut out: Vec<f64> = buf.iter().map(|z| z.re * scale).collect();
        out.push(out[0]);
        ScalarField::new(self.grid, out)
    }

    /// (-Δ)^s u via the symbol |ξ|^{2s}.
    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        warn_if_not_decayed(u, "apply");
        self.filter(u, |sym, _| sym)
    }

    /// Solve ((-Δ)^s + c0) u = f exactly on the periodic grid.
    pub fn solve_model(&self, f: &ScalarField, c0: f64) -> Result<ScalarField> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "solve_model needs c0 > 0 for uniqueness, got {c0}"
            )));
        }
        warn_if_not_decayed(f, "solve_model");
        Ok(self.filter(f, |sym, _| 1.0 / (sym + c0)))
    }

    /// Inverse operator (-Δ)^{-s} with the zero mode projected out.
    pub fn riesz_potential(&self, f: &ScalarField) -> ScalarField {
        warn_if_not_decayed(f, "riesz_potential");
        self.filter(f, |sym, k| if k == 0 { 0.0 } else { 1.0 / sym })
    }
}

/// One-shot spectral apply for callers without a cached plan.
pub fn apply_spectral(u: &ScalarField, order: FractionalOrder) -> ScalarField {
    SpectralOp::new(u.grid(), order).apply(u)
}
