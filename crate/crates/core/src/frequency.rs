//! Frequency-function diagnostics on extension fields.
//!
//! For a field v on the weighted half-plane, F(r) is the layer integral of
//! v^2 over the circle of radius r and Phi(r) the logarithmic derivative of
//! max(F, r^expo).  Phi of an exactly homogeneous field is constant at
//! 1 + a + 2 kappa; for height functions around a contact-boundary point it
//! is expected to be almost monotone, and its limit at r = 0+ classifies the
//! local growth.  The routines here compute the curve, quantify the defect
//! from monotonicity, extrapolate the limit, and fit the companion growth
//! and boundary-mean rates on the line.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{omega_weight, surface_integral};
use crate::grid::{FractionalOrder, ScalarField};
use crate::obstacle::ObstacleSolution;
use crate::problem::ProblemSpec;

const MONO_SLACK: f64 = 1e-3;
const MONO_CAP: f64 = 100.0;
const GROWTH_NOISE_FLOOR: f64 = 1e-10;

/// Radius ladder and exponents shared by the frequency diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct FrequencyParams {
    order: FractionalOrder,
    p: f64,
    alpha: f64,
    r_min: f64,
    r_max: f64,
    ladder: f64,
}

impl FrequencyParams {
    pub fn new(
        order: FractionalOrder,
        p: f64,
        alpha: f64,
        r_min: f64,
        r_max: f64,
        ladder: f64,
    ) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() || !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParam(format!(
                "exponents must be positive and finite, got p={p}, alpha={alpha}"
            )));
        }
        if !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::InvalidParam(format!(
                "radius window must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if !(ladder > 0.0 && ladder < 1.0) {
            return Err(Error::InvalidParam(format!(
                "ladder ratio must lie in (0, 1), got {ladder}"
            )));
        }
        Ok(Self { order, p, alpha, r_min, r_max, ladder })
    }

    /// Standard choices: p = s, alpha = (3s - 1)/2, ladder 0.9, radii from
    /// 2.5 h up to 1.  The compensation exponent is then 3s - 2, so the
    /// monotonicity check is meaningful for s > 2/3.
    pub fn defaults(order: FractionalOrder, h: f64) -> Self {
        let s = order.s();
        Self {
            order,
            p: s,
            alpha: (3.0 * s - 1.0) / 2.0,
            r_min: 2.5 * h,
            r_max: 1.0,
            ladder: 0.9,
        }
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn ladder(&self) -> f64 {
        self.ladder
    }

    /// Exponent of the compensation weight e^{C r^gamma}.
    pub fn gamma(&self) -> f64 {
        2.0 * (self.alpha + self.order.s() - self.p) - 1.0
    }

    /// Exponent of the truncation floor r^expo under F.
    pub fn truncation_exponent(&self) -> f64 {
        1.0 + self.order.a() + 2.0 * (1.0 + self.p)
    }

    /// Geometric radius ladder, ascending, every rung in [r_min, r_max].
    pub fn radii(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = self.r_max;
        while r >= self.r_min {
            out.push(r);
            r *= self.ladder;
        }
        out.reverse();
        out
    }
}

/// Layer integral of v^2 over the circle of radius r against |y|^a.
pub fn frequency_f<V>(v: V, r: f64, a: f64) -> f64
where
    V: Fn(f64, f64) -> f64,
{
    surface_integral(
        |x, y| {
            let t = v(x, y);
            t * t
        },
        r,
        a,
    )
}

/// Log-derivative of max(F, r^expo) along the given radii (any order works;
/// interior rungs use the symmetric difference, the ends one-sided ones).
pub fn frequency_phi(radii: &[f64], f: &[f64], expo: f64) -> Vec<f64> {
    assert_eq!(radii.len(), f.len(), "radius and F arrays differ in length");
    assert!(radii.len() >= 2, "need at least two radii for a log-derivative");
    let k = radii.len();
    let lg: Vec<f64> = radii
        .iter()
        .zip(f)
        .map(|(&r, &fi)| fi.max(r.powf(expo)).ln())
        .collect();
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut phi = vec![0.0; k];
    phi[0] = (lg[1] - lg[0]) / (lr[1] - lr[0]);
    phi[k - 1] = (lg[k - 1] - lg[k - 2]) / (lr[k - 1] - lr[k - 2]);
    for i in 1..k - 1 {
        phi[i] = (lg[i + 1] - lg[i - 1]) / (lr[i + 1] - lr[i - 1]);
    }
    phi
}

/// Frequency data along a radius ladder, radii ascending.
#[derive(Clone, Debug)]
pub struct FrequencyCurve {
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub phi: Vec<f64>,
    /// Natural comparison scale d_r = (r^{-(1+a)} F)^{1/2}.
    pub d_r: Vec<f64>,
    /// Whether the truncation floor r^expo is what Phi differentiates there.
    pub trunc_active: Vec<bool>,
}

pub fn frequency_curve<V>(v: V, params: &FrequencyParams) -> Result<FrequencyCurve>
where
    V: Fn(f64, f64) -> f64 + Sync,
{
    let radii = params.radii();
    if radii.len() < 2 {
        return Err(Error::InvalidParam(
            "radius ladder has fewer than two rungs; widen [r_min, r_max] or raise the ladder ratio"
                .into(),
        ));
    }
    let a = params.order().a();
    let f: Vec<f64> = radii.par_iter().map(|&r| frequency_f(&v, r, a)).collect();
    let expo = params.truncation_exponent();
    let phi = frequency_phi(&radii, &f, expo);
    let trunc_active: Vec<bool> =
        radii.iter().zip(&f).map(|(&r, &fi)| fi < r.powf(expo)).collect();
    let d_r: Vec<f64> =
        radii.iter().zip(&f).map(|(&r, &fi)| (r.powf(-(1.0 + a)) * fi).sqrt()).collect();
    Ok(FrequencyCurve { radii, f, phi, d_r, trunc_active })
}

/// Smallest compensation constant making e^{C r^gamma} Phi nondecreasing.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicityReport {
    /// Required constant; infinite when Phi crosses zero from above.
    pub c: f64,
    pub cap: f64,
    pub passed: bool,
    /// Radius pair that demanded the largest constant.
    pub worst: Option<(f64, f64)>,
}

/// Scan adjacent ladder rungs for decreases of Phi beyond a relative slack
/// of 1e-3 and record the constant each decrease demands.  Fails when the
/// constant exceeds 100 or when Phi drops through zero.
pub fn monotonicity_check(curve: &FrequencyCurve, params: &FrequencyParams) -> MonotonicityReport {
    let gamma = params.gamma();
    assert!(
        gamma > 0.0,
        "compensation exponent must be positive; raise alpha or lower p"
    );
    let r = &curve.radii;
    let ph = &curve.phi;
    let mut c: f64 = 0.0;
    let mut worst = None;
    for i in 0..r.len() - 1 {
        if ph[i + 1] >= ph[i] - MONO_SLACK * ph[i].abs() {
            continue;
        }
        if ph[i + 1] <= 0.0 {
            return MonotonicityReport {
                c: f64::INFINITY,
                cap: MONO_CAP,
                passed: false,
                worst: Some((r[i], r[i + 1])),
            };
        }
        let need = (ph[i] / ph[i + 1]).ln() / (r[i + 1].powf(gamma) - r[i].powf(gamma));
        if need > c {
            c = need;
            worst = Some((r[i], r[i + 1]));
        }
    }
    MonotonicityReport { c, cap: MONO_CAP, passed: c <= MONO_CAP, worst }
}

/// A field viewed at radius r and divided by its own layer scale d_r, so
/// that its unit-circle layer integral is one by construction.
pub struct RescaledField<V> {
    v: V,
    r: f64,
    d: f64,
}

impl<V> RescaledField<V>
where
    V: Fn(f64, f64) -> f64,
{
    pub fn value(&self, zx: f64, zy: f64) -> f64 {
        (self.v)(self.r * zx, self.r * zy) / self.d
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// The divisor d_r.
    pub fn scale(&self) -> f64 {
        self.d
    }
}

pub fn rescale<V>(v: V, r: f64, a: f64) -> Result<RescaledField<V>>
where
    V: Fn(f64, f64) -> f64,
{
    let f = frequency_f(&v, r, a);
    if !(f > 0.0) {
        return Err(Error::Degenerate(format!(
            "layer integral at r = {r} is {f}; nothing to rescale by"
        )));
    }
    let d = (r.powf(-(1.0 + a)) * f).sqrt();
    Ok(RescaledField { v, r, d })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitBranch {
    /// The limit sits at or above the admissible floor 1 + a + 2(1 + s).
    Floor,
    /// The truncation r^expo is active on the whole fit window, so the
    /// limit reads 1 + a + 2(1 + p) by construction.
    Truncation,
    /// The extrapolated value is well below every admissible limit; the
    /// field does not vanish at the base point (e.g. a constant).
    Degenerate,
}

#[derive(Clone, Copy, Debug)]
pub struct FrequencyLimit {
    /// Intercept of Phi fitted linearly in r^gamma over the 5 smallest radii.
    pub phi0: f64,
    pub branch: LimitBranch,
}

pub fn frequency_limit(curve: &FrequencyCurve, params: &FrequencyParams) -> Result<FrequencyLimit> {
    if curve.radii.len() < 5 {
        return Err(Error::UnderResolved(
            "fewer than five ladder rungs; lower r_min or raise the ladder ratio".into(),
        ));
    }
    let truncated = curve.trunc_active[..5].iter().filter(|&&t| t).count();
    if truncated > 0 && truncated < 5 {
        return Err(Error::UnderResolved(
            "truncation floor cuts through the extrapolation window; move the window or rescale"
                .into(),
        ));
    }
    let gamma = params.gamma();
    let t: Vec<f64> = curve.radii[..5].iter().map(|r| r.powf(gamma)).collect();
    let ph = &curve.phi[..5];
    let mt = t.iter().sum::<f64>() / 5.0;
    let mp = ph.iter().sum::<f64>() / 5.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (ti, pi) in t.iter().zip(ph) {
        num += (ti - mt) * (pi - mp);
        den += (ti - mt) * (ti - mt);
    }
    let slope = num / den;
    let phi0 = mp - slope * mt;

    let branch = if truncated == 5 {
        LimitBranch::Truncation
    } else {
        let s = params.order().s();
        let floor = 1.0 + params.order().a() + 2.0 * (1.0 + s);
        if phi0 >= floor - 0.1 {
            LimitBranch::Floor
        } else {
            LimitBranch::Degenerate
        }
    };
    Ok(FrequencyLimit { phi0, branch })
}

/// Decay of the plain (unsquared) layer mean of v.
#[derive(Clone, Debug)]
pub struct BoundaryMeanReport {
    pub radii: Vec<f64>,
    /// m(r) = layer integral of v divided by omega r^{1+a}.
    pub means: Vec<f64>,
    /// Log-log slope of max(m, floor); absent when the floor clause decides.
    pub slope: Option<f64>,
    /// All means at or below 1e-9 times the trace scale.
    pub by_floor: bool,
    pub passed: bool,
}

/// The mean must either be negligible at every radius (nonpositive fields)
/// or decay faster than r^{2s + alpha - 0.3}.
pub fn boundary_mean_check<V>(
    v: V,
    params: &FrequencyParams,
    trace_sup: f64,
) -> Result<BoundaryMeanReport>
where
    V: Fn(f64, f64) -> f64 + Sync,
{
    let radii = params.radii();
    if radii.len() < 2 {
        return Err(Error::InvalidParam(
            "radius ladder has fewer than two rungs; widen [r_min, r_max]".into(),
        ));
    }
    let a = params.order().a();
    let omega = omega_weight(a);
    let means: Vec<f64> = radii
        .par_iter()
        .map(|&r| surface_integral(&v, r, a) / (omega * r.powf(1.0 + a)))
        .collect();
    let floor = 1e-9 * trace_sup;
    let by_floor = means.iter().all(|&m| m <= floor);
    if by_floor {
        return Ok(BoundaryMeanReport { radii, means, slope: None, by_floor, passed: true });
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lm: Vec<f64> = means.iter().map(|&m| m.max(floor).ln()).collect();
    let mx = lr.iter().sum::<f64>() / lr.len() as f64;
    let my = lm.iter().sum::<f64>() / lm.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in lr.iter().zip(&lm) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = num / den;
    let target = 2.0 * params.order().s() + params.alpha() - 0.3;
    Ok(BoundaryMeanReport {
        radii,
        means,
        slope: Some(slope),
        by_floor,
        passed: slope >= target,
    })
}

/// Fit the growth exponent of a nonnegative excess u - phi around base_x:
/// the log-log slope of sup over |x - base_x| <= r against r.  Radii whose
/// supremum sits at or below the noise floor are dropped; at least six must
/// survive for the fit to mean anything.
pub fn growth_exponent_fit(excess: &ScalarField, base_x: f64, radii: &[f64]) -> Result<f64> {
    let grid = excess.grid();
    let mut lr = Vec::new();
    let mut ls = Vec::new();
    for &r in radii {
        let mut sup = f64::NEG_INFINITY;
        for (i, &w) in excess.values().iter().enumerate() {
            if (grid.x(i) - base_x).abs() <= r && w > sup {
                sup = w;
            }
        }
        if sup > GROWTH_NOISE_FLOOR {
            lr.push(r.ln());
            ls.push(sup.ln());
        }
    }
    if lr.len() < 6 {
        return Err(Error::UnderResolved(format!(
            "only {} radii rise above the noise floor; need 6 for a growth fit",
            lr.len()
        )));
    }
    let mx = lr.iter().sum::<f64>() / lr.len() as f64;
    let my = ls.iter().sum::<f64>() / ls.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in lr.iter().zip(&ls) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den)
}

/// Ten geometric radii from 4h up to 0.35 max(1, W), W the width of the
/// contact component holding the base point.  If another contact component
/// intrudes on that window the top is pulled in to 0.9 of the gap; if that
/// leaves no window at all, the fit is not attempted.
pub fn default_growth_radii(
    solution: &ObstacleSolution,
    spec: &ProblemSpec,
    base_index: usize,
) -> Result<Vec<f64>> {
    let grid = spec.grid();
    if base_index >= grid.n() || !solution.contact[base_index] {
        return Err(Error::InvalidParam(format!(
            "node {base_index} is not a contact node"
        )));
    }
    let mut components: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &c) in solution.contact.iter().enumerate() {
        match (c, start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                components.push((s0, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s0) = start {
        components.push((s0, solution.contact.len() - 1));
    }
    let own = components
        .iter()
        .copied()
        .find(|&(lo, hi)| (lo..=hi).contains(&base_index))
        .expect("flagged contact node must lie in some component");
    let width = grid.x(own.1) - grid.x(own.0);
    let h = grid.h();
    let r_lo = 4.0 * h;
    let mut r_hi = (0.35 * width.max(1.0)).max(8.0 * h);
    let base_x = grid.x(base_index);
    for &(lo, hi) in &components {
        if (lo, hi) == own {
            continue;
        }
        let gap = (grid.x(lo) - base_x).abs().min((grid.x(hi) - base_x).abs());
        if gap < r_hi {
            r_hi = r_hi.min(0.9 * gap);
        }
    }
    if r_hi <= r_lo {
        return Err(Error::UnderResolved(
            "another contact component crowds the base point; no growth window left".into(),
        ));
    }
    let count = 10;
    let ratio = (r_hi / r_lo).powf(1.0 / (count - 1) as f64);
    Ok((0..count).map(|k| r_lo * ratio.powi(k as i32)).collect())
}
