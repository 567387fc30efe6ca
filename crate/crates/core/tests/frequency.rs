//! Frequency curve on exactly homogeneous fields, the compensated
//! monotonicity constant against a brute scan, rescaling, limit branches,
//! boundary-mean decay, and the growth-exponent fit.

use fraclab_core::{
    boundary_mean_check, default_growth_radii, frequency_curve, frequency_f, frequency_limit,
    growth_exponent_fit, monotonicity_check, omega_weight, rescale, Error, FractionalOrder,
    FrequencyCurve, FrequencyParams, GridSpec, LimitBranch, ObstacleSolution, ScalarField,
};
use proptest::prelude::*;

const S: f64 = 0.75;
const A: f64 = 1.0 - 2.0 * S;

fn params() -> FrequencyParams {
    // ladder of a 1025-node half-width-8 grid
    FrequencyParams::defaults(FractionalOrder::new(S).unwrap(), 16.0 / 1024.0)
}

fn radial(kappa: f64, amp: f64) -> impl Fn(f64, f64) -> f64 + Sync + Copy {
    move |x, y| amp * (x * x + y * y).powf(kappa / 2.0)
}

#[test]
fn params_validate_and_expose_their_exponents() {
    let ord = FractionalOrder::new(S).unwrap();
    assert!(FrequencyParams::new(ord, 0.0, 0.6, 0.01, 1.0, 0.9).is_err());
    assert!(FrequencyParams::new(ord, S, -0.1, 0.01, 1.0, 0.9).is_err());
    assert!(FrequencyParams::new(ord, S, 0.6, 0.0, 1.0, 0.9).is_err());
    assert!(FrequencyParams::new(ord, S, 0.6, 1.0, 0.5, 0.9).is_err());
    assert!(FrequencyParams::new(ord, S, 0.6, 0.01, 1.0, 1.0).is_err());
    assert!(FrequencyParams::new(ord, S, 0.6, 0.01, 1.0, 0.0).is_err());

    let p = params();
    // gamma = 2(alpha + s - p) - 1 = 3s - 2 at the defaults
    assert!((p.gamma() - (3.0 * S - 2.0)).abs() < 1e-15);
    assert!((p.truncation_exponent() - (1.0 + A + 2.0 * (1.0 + S))).abs() < 1e-15);
    let radii = p.radii();
    assert!(radii.len() > 5);
    assert!(radii.windows(2).all(|w| w[0] < w[1]));
    assert!(radii[0] >= p.r_min() && *radii.last().unwrap() <= p.r_max());
    assert_eq!(*radii.last().unwrap(), p.r_max());
}

#[test]
fn layer_integral_on_reference_fields() {
    let omega = omega_weight(A);
    for &r in &[0.05, 0.3, 1.0] {
        let f1 = frequency_f(|_, _| 1.0, r, A);
        assert!(((f1 - omega * r.powf(1.0 + A)) / f1).abs() < 1e-12);
        // v = |(x, y)| squares to the homogeneous degree-2 integrand
        let f2 = frequency_f(|x, y| (x * x + y * y).sqrt(), r, A);
        assert!(((f2 - omega * r.powf(3.0 + A)) / f2).abs() < 1e-12);
        assert_eq!(frequency_f(|_, _| 0.0, r, A), 0.0);
    }
}

#[test]
fn phi_is_constant_on_homogeneous_fields() {
    let p = params();
    // v identically 1: F ~ r^{1+a}
    let curve = frequency_curve(|_, _| 1.0, &p).unwrap();
    for (phi, trunc) in curve.phi.iter().zip(&curve.trunc_active) {
        assert!(!trunc);
        assert!((phi - (1.0 + A)).abs() < 1e-9, "phi {phi}");
    }
    // degree-1 cone
    let curve = frequency_curve(radial(1.0, 1.0), &p).unwrap();
    for phi in &curve.phi {
        assert!((phi - (1.0 + A + 2.0)).abs() < 1e-9, "phi {phi}");
    }
    // far below the floor: the truncation branch differentiates r^expo
    let expo = p.truncation_exponent();
    let curve = frequency_curve(radial(2.2, 1e-3), &p).unwrap();
    for (phi, trunc) in curve.phi.iter().zip(&curve.trunc_active) {
        assert!(trunc);
        assert!((phi - expo).abs() < 1e-9, "phi {phi}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn phi_reads_the_homogeneity_degree(kappa in 0.1f64..3.0, amp in 0.5f64..2.0) {
        let p = params();
        let curve = frequency_curve(radial(kappa, amp), &p).unwrap();
        let expo = p.truncation_exponent();
        let k = curve.radii.len();
        for i in 1..k - 1 {
            // central differences mix the two branches of G where the
            // truncation flag changes; only flag-stable rungs are exact
            let t = curve.trunc_active[i];
            if curve.trunc_active[i - 1] != t || curve.trunc_active[i + 1] != t {
                continue;
            }
            let expect = if t { expo } else { 1.0 + A + 2.0 * kappa };
            prop_assert!((curve.phi[i] - expect).abs() < 1e-3,
                "rung {i}: phi {} vs {expect}", curve.phi[i]);
        }
    }

    #[test]
    fn rescaling_preserves_the_unit_layer_integral(kappa in 0.1f64..2.0, r in 0.05f64..1.0) {
        let resc = rescale(radial(kappa, 1.3), r, A).unwrap();
        let unit = frequency_f(|zx, zy| resc.value(zx, zy), 1.0, A);
        prop_assert!((unit - 1.0).abs() < 1e-12, "unit layer integral {unit}");
    }
}

#[test]
fn monotonicity_constant_is_the_infimum() {
    let p = params();
    let gamma = p.gamma();
    // synthetic descending phi: mu - r^gamma demands a finite constant
    let radii: Vec<f64> = (0..20).map(|k| 0.1 * 1.15f64.powi(k)).collect();
    let phi: Vec<f64> = radii.iter().map(|r| 3.0 - 0.8 * r.powf(gamma)).collect();
    let k = radii.len();
    let curve = FrequencyCurve {
        radii: radii.clone(),
        f: vec![1.0; k],
        phi: phi.clone(),
        d_r: vec![1.0; k],
        trunc_active: vec![false; k],
    };
    let rep = monotonicity_check(&curve, &p);
    assert!(rep.passed && rep.c > 0.0 && rep.worst.is_some());

    // c is the smallest constant: a hair below fails some pair, a hair
    // above satisfies them all (pairs inside the slack are exempt)
    let admissible = |cc: f64| {
        (0..k - 1).all(|i| {
            phi[i + 1] >= phi[i] - 1e-3 * phi[i].abs()
                || phi[i + 1] * (cc * radii[i + 1].powf(gamma)).exp()
                    >= phi[i] * (cc * radii[i].powf(gamma)).exp()
        })
    };
    assert!(!admissible(rep.c * (1.0 - 1e-6)));
    assert!(admissible(rep.c * (1.0 + 1e-6)));
    // and the coarse scan lands on the same value
    let grid_c = (0..=1000)
        .map(|k| 0.1 * k as f64)
        .find(|&cc| admissible(cc))
        .unwrap();
    assert!(grid_c >= rep.c && grid_c - rep.c <= 0.1 + 1e-12);
}

#[test]
fn monotone_phi_needs_no_compensation() {
    let p = params();
    let curve = frequency_curve(radial(1.2, 1.0), &p).unwrap();
    let rep = monotonicity_check(&curve, &p);
    assert_eq!(rep.c, 0.0);
    assert!(rep.passed);
    assert!(rep.worst.is_none());
}

#[test]
fn phi_through_zero_cannot_be_compensated() {
    let p = params();
    let radii = vec![0.1, 0.2, 0.4, 0.8];
    let curve = FrequencyCurve {
        radii,
        f: vec![1.0; 4],
        phi: vec![1.0, 0.5, -0.2, 0.6],
        d_r: vec![1.0; 4],
        trunc_active: vec![false; 4],
    };
    let rep = monotonicity_check(&curve, &p);
    assert!(rep.c.is_infinite());
    assert!(!rep.passed);
}

#[test]
fn rescale_diagnostics() {
    // the layer scale of the unit field is sqrt(omega)
    let resc = rescale(|_, _| 1.0, 0.37, A).unwrap();
    assert!((resc.scale() - omega_weight(A).sqrt()).abs() < 1e-12);
    assert_eq!(resc.radius(), 0.37);
    assert!(matches!(
        rescale(|_, _| 0.0, 0.5, A),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn limit_classifies_the_three_branches() {
    let p = params();
    let expo = p.truncation_exponent();

    // kappa = 1 + p with visible amplitude: the fit reproduces the floor
    let curve = frequency_curve(radial(1.0 + p.p(), 2.0), &p).unwrap();
    let lim = frequency_limit(&curve, &p).unwrap();
    assert_eq!(lim.branch, LimitBranch::Floor);
    assert!((lim.phi0 - expo).abs() < 1e-6, "phi0 {}", lim.phi0);

    // steeper decay at tiny amplitude sinks below r^expo everywhere
    let curve = frequency_curve(radial(2.2, 1e-3), &p).unwrap();
    let lim = frequency_limit(&curve, &p).unwrap();
    assert_eq!(lim.branch, LimitBranch::Truncation);
    assert!((lim.phi0 - expo).abs() < 1e-9);

    // a field that does not vanish at the origin extrapolates to 1 + a
    let curve = frequency_curve(|_, _| 1.0, &p).unwrap();
    let lim = frequency_limit(&curve, &p).unwrap();
    assert_eq!(lim.branch, LimitBranch::Degenerate);
    assert!((lim.phi0 - (1.0 + A)).abs() < 1e-6);
}

#[test]
fn limit_needs_a_deep_enough_ladder() {
    let ord = FractionalOrder::new(S).unwrap();
    let p = FrequencyParams::new(ord, S, 0.625, 0.7, 1.0, 0.9).unwrap();
    assert_eq!(p.radii().len(), 4);
    let curve = frequency_curve(radial(1.0, 1.0), &p).unwrap();
    assert!(matches!(
        frequency_limit(&curve, &p),
        Err(Error::UnderResolved(_))
    ));
}

#[test]
fn limit_rejects_a_window_cut_by_the_truncation_floor() {
    let p = params();
    let radii: Vec<f64> = p.radii();
    let k = radii.len();
    let curve = FrequencyCurve {
        radii,
        f: vec![1.0; k],
        phi: vec![4.0; k],
        d_r: vec![1.0; k],
        trunc_active: (0..k).map(|i| i % 2 == 0).collect(),
    };
    assert!(matches!(
        frequency_limit(&curve, &p),
        Err(Error::UnderResolved(_))
    ));
}

#[test]
fn boundary_mean_slope_and_floor_clause() {
    let p = params();
    let target = 2.0 * S + p.alpha();

    // |sigma|^{2s+alpha} has mean exactly r^{2s+alpha}
    let rep = boundary_mean_check(radial(target, 1.0), &p, 1.0).unwrap();
    assert!(rep.passed && !rep.by_floor);
    let slope = rep.slope.unwrap();
    assert!((slope - target).abs() < 1e-9, "slope {slope}");

    // decay too slow to certify
    let rep = boundary_mean_check(radial(0.2, 1.0), &p, 1.0).unwrap();
    assert!(!rep.passed);
    assert!((rep.slope.unwrap() - 0.2).abs() < 1e-9);

    // nonpositive fields pass by the floor clause
    let rep = boundary_mean_check(radial(0.1, -1.0), &p, 1.0).unwrap();
    assert!(rep.passed && rep.by_floor && rep.slope.is_none());
    assert!(rep.means.iter().all(|&m| m < 0.0));
}

#[test]
fn growth_fit_recovers_exact_power_laws() {
    let grid = GridSpec::new(8.0, 1025).unwrap();
    let h = grid.h();
    let xb = grid.x(612);
    let radii: Vec<f64> = (4..14).map(|k| h * (k as f64 + 1e-9)).collect();
    for &(expo, tol) in &[(1.0 + S, 1e-6), (2.0, 1e-6)] {
        let excess = ScalarField::from_fn(grid, |x| (x - xb).abs().powf(expo));
        let khat = growth_exponent_fit(&excess, xb, &radii).unwrap();
        assert!(
            (khat - expo).abs() < tol,
            "fitted {khat} for degree {expo}"
        );
    }
}

#[test]
fn growth_fit_guards_against_flat_or_thin_data() {
    let grid = GridSpec::new(8.0, 1025).unwrap();
    let h = grid.h();
    let xb = grid.x(512);
    let radii: Vec<f64> = (4..14).map(|k| h * (k as f64 + 1e-9)).collect();
    let zero = ScalarField::zeros(grid);
    assert!(matches!(
        growth_exponent_fit(&zero, xb, &radii),
        Err(Error::UnderResolved(_))
    ));
    let excess = ScalarField::from_fn(grid, |x| (x - xb).abs().powf(1.75));
    assert!(matches!(
        growth_exponent_fit(&excess, xb, &radii[..5]),
        Err(Error::UnderResolved(_))
    ));
}

fn synthetic_contact(
    grid: GridSpec,
    spans: &[(f64, f64)],
) -> ObstacleSolution {
    let contact: Vec<bool> = (0..grid.n())
        .map(|i| spans.iter().any(|&(lo, hi)| (lo..=hi).contains(&grid.x(i))))
        .collect();
    let free_boundary: Vec<usize> = (0..grid.n())
        .filter(|&i| {
            contact[i]
                && ((i > 0 && !contact[i - 1]) || (i + 1 < grid.n() && !contact[i + 1]))
        })
        .collect();
    ObstacleSolution {
        u: ScalarField::zeros(grid),
        contact,
        residual_lu: ScalarField::zeros(grid),
        comp_residual: 0.0,
        free_boundary,
    }
}

fn spec_for(grid: GridSpec) -> fraclab_core::ProblemSpec {
    let ord = FractionalOrder::new(S).unwrap();
    let coeffs = fraclab_core::CoefficientSpec::constant(grid, 0.0, 1.0).unwrap();
    let phi = ScalarField::from_fn(grid, |x| -1.0 - 0.01 * x.cos());
    fraclab_core::ProblemSpec::new(ord, coeffs, phi).unwrap()
}

#[test]
fn growth_window_follows_the_contact_geometry() {
    let grid = GridSpec::new(8.0, 1025).unwrap();
    let h = grid.h();
    let spec = spec_for(grid);

    // lone component of width 2: window runs from 4h to 0.35 * 2
    let sol = synthetic_contact(grid, &[(-1.0, 1.0)]);
    let base = *sol.free_boundary.last().unwrap();
    let radii = default_growth_radii(&sol, &spec, base).unwrap();
    assert_eq!(radii.len(), 10);
    assert!((radii[0] - 4.0 * h).abs() < 1e-12);
    assert!((radii[9] - 0.7).abs() < 1e-3);

    // a second component ~0.3 away pulls the window in to 0.9 of the gap
    let sol = synthetic_contact(grid, &[(-1.0, 1.0), (1.3, 2.0)]);
    let base = sol.free_boundary[1];
    assert_eq!(grid.x(base), grid.x(grid.nearest(1.0)));
    let near = (0..grid.n())
        .filter(|&i| sol.contact[i] && grid.x(i) > 1.2)
        .map(|i| grid.x(i) - grid.x(base))
        .fold(f64::INFINITY, f64::min);
    let radii = default_growth_radii(&sol, &spec, base).unwrap();
    assert!((radii[9] - 0.9 * near).abs() < 1e-9, "top rung {}", radii[9]);

    // closer than 4h / 0.9 leaves no window at all
    let tight = 4.0 * h;
    let sol = synthetic_contact(grid, &[(-1.0, 1.0), (1.0 + tight, 2.0)]);
    let base = sol.free_boundary[1];
    assert!(matches!(
        default_growth_radii(&sol, &spec, base),
        Err(Error::UnderResolved(_))
    ));

    // non-contact base point is rejected
    let sol = synthetic_contact(grid, &[(-1.0, 1.0)]);
    assert!(matches!(
        default_growth_radii(&sol, &spec, grid.nearest(3.0)),
        Err(Error::InvalidParam(_))
    ));
}
