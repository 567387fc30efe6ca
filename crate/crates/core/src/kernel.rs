//! Singular-integral kernel: normalization constants and circulant
//! quadrature weights for the periodic difference form of (-Δ)^s.
//!
//! In 1-D the operator acts as
//!     (-Δ)^s u(x) = c_s PV ∫ (u(x) - u(y)) |x-y|^{-1-2s} dy
//!                 = c_s ∫_0^∞ (2u(x) - u(x+y) - u(x-y)) y^{-1-2s} dy,
//! and on a periodic grid the second form collapses to a circulant sum
//!     (-Δ)^s u_i ≈ c_s Σ_{k=1}^{N/2} V_k (2u_i - u_{i+k} - u_{i-k}).
//! V is built once per (s, grid) pair: piecewise-cubic product quadrature
//! over 32 box periods plus the analytic remainder of the kernel tail,
//! folded into the N/2 distinct periodic offsets.

use crate::error::Result;
use crate::grid::{FractionalOrder, GridSpec};
use statrs::function::gamma::gamma;

/// 24-point Gauss-Legendre rule on [0, 1].
pub const GL24_X: [f64; 24] = [
    2.40639000148934468e-03,
    1.26357220143452631e-02,
    3.08627239986336011e-02,
    5.67922364977995198e-02,
    8.99990070130485265e-02,
    1.29937904210722821e-01,
    1.75953174031512227e-01,
    2.27289264305580219e-01,
    2.83103246186977464e-01,
    3.42478660151918302e-01,
    4.04440566263191859e-01,
    4.67971553568697185e-01,
    5.32028446431302759e-01,
    5.95559433736808197e-01,
    6.57521339848081698e-01,
    7.16896753813022536e-01,
    7.72710735694419837e-01,
    8.24046825968487773e-01,
    8.70062095789277179e-01,
    9.10000992986951474e-01,
    9.43207763502200480e-01,
    9.69137276001366343e-01,
    9.87364277985654737e-01,
    9.97593609998510655e-01,
];

pub const GL24_W: [f64; 24] = [
    6.17061489999354545e-03,
    1.42656943144668716e-02,
    2.21387194087097755e-02,
    2.96492924577183709e-02,
    3.66732407055402054e-02,
    4.30950807659766441e-02,
    4.88093260520570324e-02,
    5.37221350579828033e-02,
    5.77528340268628065e-02,
    6.08352364639017096e-02,
    6.29187281734141513e-02,
    6.39690976733761074e-02,
    6.39690976733761074e-02,
    6.29187281734141513e-02,
    6.08352364639017096e-02,
    5.77528340268628065e-02,
    5.37221350579828033e-02,
    4.88093260520570324e-02,
    4.30950807659766441e-02,
    3.66732407055402054e-02,
    2.96492924577183709e-02,
    2.21387194087097755e-02,
    1.42656943144668716e-02,
    6.17061489999354545e-03,
];

/// Kernel normalization c_{n,s} = 4^s Γ(n/2+s) s / (π^{n/2} Γ(1-s)).
///
/// Takes a raw s so the s → 1/2 limit (value 1/π in 1-D) is testable even
/// though solvers only accept s in (1/2, 1).
pub fn normalization_constant(s: f64, dim: usize) -> f64 {
    let d = dim as f64;
    4f64.powf(s) * gamma(d / 2.0 + s) * s / (std::f64::consts::PI.powf(d / 2.0) * gamma(1.0 - s))
}

/// Dirichlet-to-Neumann constant of the weighted extension,
/// κ₀ = 2^{1-2s} Γ(1-s) / Γ(s); the flux -lim y^a v_y equals κ₀ (-Δ)^s g.
pub fn dtn_constant(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

/// Lagrange basis coefficients (rows: nodes, cols: powers of τ) for the
/// cubic stencil at offsets {-1, 0, 1, 2} relative to the interval [0, 1].
const LAGRANGE_C: [[f64; 4]; 4] = [
    [0.0, -1.0 / 3.0, 0.5, -1.0 / 6.0],
    [1.0, -0.5, -1.0, 0.5],
    [0.0, 1.0, 0.5, -0.5],
    [0.0, -1.0 / 6.0, 0.0, 1.0 / 6.0],
];

/// μ_p = ∫_0^1 τ^p (k+τ)^{-1-2s} dτ for p = 0..3.
fn interval_moments(k: f64, s: f64) -> [f64; 4] {
    let mut mu = [0.0; 4];
    for (t, w) in GL24_X.iter().zip(GL24_W.iter()) {
        let f = w * (k + t).powf(-1.0 - 2.0 * s);
        let mut tp = 1.0;
        for m in mu.iter_mut() {
            *m += tp * f;
            tp *= t;
        }
    }
    mu
}

/// Dimensionless tail weights W_j (y in units of h) for the half-line
/// integral ∫_0^∞ D(y) y^{-1-2s} dy ≈ h^{-2s} Σ_j W_j D_j, where
/// D_j = 2u_i - u_{i+j} - u_{i-j}.
///
/// First cell [0, h]: D is even with D(0) = 0, so fit D(τ) = Aτ² + Bτ⁴
/// through D_1 and D_4 and integrate the fit against τ^{-1-2s} exactly.
/// Cells [k, k+1]h for k ≥ 1: cubic Lagrange product quadrature on the
/// fixed stencil {k-1, k, k+1, k+2}.
fn base_weights(s: f64, jmax: usize) -> Vec<f64> {
    let mut w = vec![0.0; jmax + 5];
    let i2 = 1.0 / (2.0 - 2.0 * s);
    let i4 = 1.0 / (4.0 - 2.0 * s);
    let m = 4.0_f64;
    let det = m.powi(4) - m.powi(2);
    w[1] += i2 - (m * m / det) * (i4 - i2);
    w[4] += (i4 - i2) / det;
    for k in 1..jmax {
        let mu = interval_moments(k as f64, s);
        for node in 0..4 {
            let mut acc = 0.0;
            for p in 0..4 {
                acc += LAGRANGE_C[node][p] * mu[p];
            }
            w[k - 1 + node] += acc;
        }
    }
    w
}

/// Circulant quadrature weights for one (order, grid) pair.
///
/// `v[k]`, k = 1..=N/2, multiplies the symmetric difference at offset k;
/// v[0] is unused. Weights are positive and aggregate 32 periods of the
/// kernel plus the analytic remainder ∫_Z^∞ y^{-1-2s} dy = Z^{-2s}/2s,
/// spread uniformly over the offsets (2/N per interior offset, 1/N at N/2,
/// matching each offset's share of nodes per period).
#[derive(Clone, Debug)]
pub struct KernelTable {
    order: FractionalOrder,
    grid: GridSpec,
    cns: f64,
    v: Vec<f64>,
    tail: f64,
}

const KERNEL_PERIODS: usize = 32;

impl KernelTable {
    pub fn build(order: FractionalOrder, grid: GridSpec) -> Result<Self> {
        let s = order.s();
        let nn = grid.n() - 1;
        let h = grid.h();
        let jmax = KERNEL_PERIODS * nn;
        let scale = h.powf(-2.0 * s);
        let wb = base_weights(s, jmax);
        let mut v = vec![0.0; nn / 2 + 1];
        for (j, wj) in wb.iter().enumerate().skip(1) {
            let mut kk = j % nn;
            if kk == 0 {
                continue;
            }
            if kk > nn / 2 {
                kk = nn - kk;
            }
            v[kk] += wj * scale;
        }
        let z = jmax as f64 * h;
        let tail = z.powf(-2.0 * s) / (2.0 * s);
        for vk in v.iter_mut().take(nn / 2).skip(1) {
            *vk += tail * 2.0 / nn as f64;
        }
        v[nn / 2] += tail / nn as f64;
        Ok(Self {
            order,
            grid,
            cns: normalization_constant(s, 1),
            v,
            tail,
        })
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Kernel normalization constant c_{1,s}.
    pub fn cns(&self) -> f64 {
        self.cns
    }

    /// Offset weights; index 0 is unused, valid offsets are 1..=N/2.
    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    /// Analytic remainder mass beyond the aggregated periods.
    pub fn tail(&self) -> f64 {
        self.tail
    }
}
