//! Turns a validated config into core objects and runs the pipeline
//! stages.  Module errors never abort a run: each stage converts them
//! into failed check rows and the run keeps going.

use crate::config::{FrequencyConfig, McConfig, ObstacleConfig, ScenarioConfig};
use crate::runs::CheckRow;
use fraclab_core::{
    boundary_mean_check, bump, default_growth_radii, frequency_curve, frequency_limit,
    growth_exponent_fit, height_function, monotonicity_check, named_obstacle, obstacle_solve,
    seeded_polish_solve, suboptimality_check, value_at, CoefficientSpec, Error, FractionalOrder,
    FrequencyCurve, FrequencyParams, GridSpec, HalfSpaceGrid, KernelTable, MCEstimate,
    ObstacleOpts, ObstacleSolution, PathConfig, ProblemSpec, Result, ScalarField, StoppingRule,
};
use log::info;

pub struct Instance {
    pub config: ScenarioConfig,
    pub spec: ProblemSpec,
    pub table: KernelTable,
}

pub fn build(config: ScenarioConfig) -> Result<Instance> {
    let p = &config.problem;
    let order = FractionalOrder::new(p.s)?;
    let grid = GridSpec::new(p.half_width, p.n)?;
    let obstacle = match p.obstacle {
        ObstacleConfig::Bump { center, width, amp } => {
            ScalarField::from_fn(grid, bump(center, width, amp))
        }
        ObstacleConfig::ShiftedBump => named_obstacle("shifted-bump", grid)?,
        ObstacleConfig::TwoBumps => named_obstacle("two-bumps", grid)?,
        ObstacleConfig::Negative => named_obstacle("negative", grid)?,
    };
    let b = ScalarField::from_fn(grid, |x| p.b.eval(x));
    let c = ScalarField::from_fn(grid, |x| p.c.eval(x));
    let coeffs = CoefficientSpec::new(b, c, p.c.lower_bound())?;
    let spec = ProblemSpec::new(order, coeffs, obstacle)?;
    let table = KernelTable::build(order, grid);
    Ok(Instance {
        config,
        spec,
        table,
    })
}

/// Obstacle solve plus its complementarity check row.
pub fn solve_stage(inst: &Instance) -> (Option<ObstacleSolution>, Vec<CheckRow>) {
    let sc = &inst.config.solver;
    let phi_max = inst.spec.obstacle().max_abs();
    info!(
        "solving {} (n = {}, s = {}, {} route)",
        inst.config.name,
        inst.spec.grid().n(),
        inst.spec.order().s(),
        if sc.seeded { "seeded" } else { "continuation" }
    );
    let outcome: Result<(ObstacleSolution, f64)> = if sc.seeded {
        seeded_polish_solve(&inst.spec, &inst.table, &sc.eps_schedule, sc.tol)
            .map(|sol| (sol, 1e-4 * phi_max))
    } else {
        let opts = ObstacleOpts {
            schedule: sc.eps_schedule.clone(),
            tol: sc.tol,
            polish: sc.polish,
            max_pi_iter: 100,
        };
        obstacle_solve(&inst.spec, &inst.table, &opts).map(|report| {
            let bound = (10.0 * report.eps_last * report.l_phi_plus_norm).max(1e-4 * phi_max);
            (report.solution, bound)
        })
    };
    match outcome {
        Ok((solution, bound)) => {
            let row = CheckRow::new(
                "solve/compResidual",
                solution.comp_residual,
                format!("<= {bound:.3e}"),
                solution.comp_residual <= bound,
            );
            (Some(solution), vec![row])
        }
        Err(e) => (None, vec![CheckRow::failed("solve/obstacle", e)]),
    }
}

/// Standard probe spread: middle of the contact set, its right edge, two
/// points beyond the edge, one point before the left edge.
fn auto_probes(grid: GridSpec, solution: &ObstacleSolution) -> Vec<f64> {
    let first = solution.contact.iter().position(|&c| c);
    let last = solution.contact.iter().rposition(|&c| c);
    let (ia0, ia1) = match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => return Vec::new(),
    };
    let n = grid.n();
    let candidates = [
        ia0 + (ia1 - ia0) / 2,
        ia1,
        (ia1 + 4).min(n - 1),
        (ia1 + 16).min(n - 1),
        ia0.saturating_sub(30),
    ];
    let mut out = Vec::new();
    for ix in candidates {
        let x = grid.x(ix);
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

pub struct McOutcome {
    /// (x0, estimate) for every probe and rule, in emission order.
    pub rows: Vec<(f64, MCEstimate)>,
    pub checks: Vec<CheckRow>,
}

pub fn mc_stage(inst: &Instance, solution: &ObstacleSolution, mc: &McConfig) -> McOutcome {
    let grid = inst.spec.grid();
    let phi_max = inst.spec.obstacle().max_abs();
    let allowance = 0.02 * phi_max;
    let probes: Vec<f64> = match &mc.probes {
        Some(list) => list.iter().map(|&x| grid.x(grid.nearest(x))).collect(),
        None => auto_probes(grid, solution),
    };
    let mut out = McOutcome {
        rows: Vec::new(),
        checks: Vec::new(),
    };
    if probes.is_empty() {
        out.checks.push(CheckRow::failed(
            "mc/probes",
            "no contact set to derive probes from; set mc.probes explicitly",
        ));
        return out;
    }
    for (k, &x0) in probes.iter().enumerate() {
        let config = PathConfig {
            dt: mc.dt,
            horizon: mc.horizon,
            n_paths: mc.n_paths,
            seed: inst.config.seed.wrapping_add(k as u64),
            kill_radius: inst.spec.grid().half_width(),
        };
        info!("mc probe {k} at x0 = {x0:.4} ({} paths)", mc.n_paths);
        match value_at(x0, StoppingRule::Contact, &inst.spec, solution, &config) {
            Ok(est) => {
                let uref = solution.u.values()[grid.nearest(x0)];
                let err = (est.mean - uref).abs();
                let band = 4.0 * est.std_err + allowance;
                out.checks.push(CheckRow::new(
                    format!("mc/value@{x0:.4}"),
                    err,
                    format!("<= {band:.3e}"),
                    err <= band,
                ));
                out.rows.push((x0, est));
            }
            Err(e) => out
                .checks
                .push(CheckRow::failed(format!("mc/value@{x0:.4}"), e)),
        }
    }
    // every other admissible rule is a lower bound for the value; probe
    // one representative point just beyond the contact edge
    let x0 = probes[probes.len().min(3) - 1];
    let uref = solution.u.values()[grid.nearest(x0)];
    let half = inst.spec.grid().half_width();
    let alt_rules = [
        StoppingRule::StopNow,
        StoppingRule::FixedTime(0.1),
        StoppingRule::FixedTime(0.5),
        StoppingRule::FixedTime(1.0),
        StoppingRule::FirstExit {
            lo: -0.5 * half,
            hi: 0.5 * half,
        },
        StoppingRule::Never,
    ];
    let config = PathConfig {
        dt: mc.dt,
        horizon: mc.horizon,
        n_paths: mc.alt_paths,
        seed: inst.config.seed.wrapping_add(1000),
        kill_radius: half,
    };
    info!("mc suboptimality sweep at x0 = {x0:.4}");
    match suboptimality_check(x0, &alt_rules, &inst.spec, solution, &config) {
        Ok(ests) => {
            for est in ests {
                let band = uref + 4.0 * est.std_err + allowance;
                out.checks.push(CheckRow::new(
                    format!("mc/alt-{}@{x0:.4}", est.rule.label()),
                    est.mean,
                    format!("<= {band:.3e}"),
                    est.mean <= band,
                ));
                out.rows.push((x0, est));
            }
        }
        Err(e) => out.checks.push(CheckRow::failed("mc/alt", e)),
    }
    out
}

pub struct FrequencyOutcome {
    /// (base node, curve) per analyzed free-boundary point.
    pub curves: Vec<(usize, FrequencyCurve)>,
    pub checks: Vec<CheckRow>,
}

fn frequency_at_base(
    inst: &Instance,
    solution: &ObstacleSolution,
    fc: &FrequencyConfig,
    base: usize,
    out: &mut FrequencyOutcome,
) -> Result<()> {
    let spec = &inst.spec;
    let order = spec.order();
    let grid = spec.grid();
    let s = order.s();
    let half = HalfSpaceGrid::new(grid, order, fc.extent, fc.rows)?;
    let field = height_function(solution, spec, &inst.table, base, &half)?;
    let params = FrequencyParams::new(
        order,
        fc.p.unwrap_or(s),
        fc.alpha.unwrap_or((3.0 * s - 1.0) / 2.0),
        fc.r_min.unwrap_or(2.5 * grid.h()),
        fc.r_max,
        fc.ladder,
    )?;
    let v = |x: f64, y: f64| field.value(x, y);

    let curve = frequency_curve(v, &params)?;
    let mono = monotonicity_check(&curve, &params);
    out.checks.push(CheckRow::new(
        format!("frequency/monoC@{base}"),
        mono.c,
        format!("<= {}", mono.cap),
        mono.passed,
    ));
    let floor = 1.0 + order.a() + 2.0 * (1.0 + s) - 0.1;
    match frequency_limit(&curve, &params) {
        Ok(lim) => out.checks.push(CheckRow::new(
            format!("frequency/phi0@{base}"),
            lim.phi0,
            format!(">= {floor:.4} ({:?} branch)", lim.branch),
            lim.phi0 >= floor,
        )),
        Err(e) => out
            .checks
            .push(CheckRow::failed(format!("frequency/phi0@{base}"), e)),
    }

    if fc.growth {
        let excess = solution.u.zip(spec.obstacle(), |u, p| u - p);
        let khat = default_growth_radii(solution, spec, base)
            .and_then(|radii| growth_exponent_fit(&excess, grid.x(base), &radii));
        match khat {
            Ok(k) => out.checks.push(CheckRow::new(
                format!("frequency/khat@{base}"),
                k,
                format!("within 0.15 of {}", 1.0 + s),
                (k - (1.0 + s)).abs() <= 0.15,
            )),
            Err(e) => out
                .checks
                .push(CheckRow::failed(format!("frequency/khat@{base}"), e)),
        }
    }
    if fc.boundary_mean {
        let trace_sup = field
            .trace()
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        match boundary_mean_check(v, &params, trace_sup) {
            Ok(rep) => {
                let target = 2.0 * s + params.alpha() - 0.3;
                out.checks.push(CheckRow::new(
                    format!("frequency/boundaryMean@{base}"),
                    rep.slope.unwrap_or(f64::INFINITY),
                    format!(">= {target:.4} or below floor"),
                    rep.passed,
                ));
            }
            Err(e) => out.checks.push(CheckRow::failed(
                format!("frequency/boundaryMean@{base}"),
                e,
            )),
        }
    }
    out.curves.push((base, curve));
    Ok(())
}

pub fn frequency_stage(
    inst: &Instance,
    solution: &ObstacleSolution,
    fc: &FrequencyConfig,
) -> FrequencyOutcome {
    let mut out = FrequencyOutcome {
        curves: Vec::new(),
        checks: Vec::new(),
    };
    if solution.free_boundary.is_empty() {
        out.checks.push(CheckRow {
            name: "frequency/freeBoundary".into(),
            measured: Some(0.0),
            band: "no free boundary; nothing to analyze".into(),
            passed: true,
        });
        return out;
    }
    for &base in &solution.free_boundary {
        info!("frequency pipeline at node {base}");
        if let Err(e) = frequency_at_base(inst, solution, fc, base, &mut out) {
            out.checks
                .push(CheckRow::failed(format!("frequency/base@{base}"), e));
        }
    }
    out
}

/// Pin down instability sources the check rows would otherwise inherit:
/// module errors become failed rows, never process aborts.
pub fn error_row(stage: &str, e: Error) -> CheckRow {
    CheckRow::failed(stage, e)
}
