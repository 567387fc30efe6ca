//! Monte Carlo cross-check of the obstacle solver.
//!
//! The solution of the obstacle problem is the value function of an optimal
//! stopping problem for the jump diffusion dX = -b(X) dt + dJ, where J is
//! the symmetric 2s-stable process generated by -(-Δ)^s, with running
//! discount exp(-∫ c(X) ds) and payoff φ at the stopping time. Stopping at
//! the first visit to the contact set is optimal; every other rule gives a
//! lower value. Both facts are testable with nothing but the path sampler
//! and the solver output, which makes this module an oracle for the PDE
//! side (and vice versa).
//!
//! Estimates are bit-reproducible: path p draws from a counter-based
//! stream keyed by (seed, p), so thread scheduling cannot change results,
//! and aggregation uses a fixed pairwise summation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::FractionalOrder;
use crate::obstacle::ObstacleSolution;
use crate::problem::{CoefficientSpec, ProblemSpec};

/// Time stepping and sampling budget for one estimator run.
#[derive(Clone, Copy, Debug)]
pub struct PathConfig {
    pub dt: f64,
    /// Paths still alive at the horizon contribute payoff 0.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Paths beyond |x| > kill_radius are stopped with payoff 0.
    pub kill_radius: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            n_paths: 100_000,
            seed: 0,
            kill_radius: 8.0,
        }
    }
}

impl PathConfig {
    /// The horizon must satisfy c0 * horizon >= 10 so the discounted mass
    /// ignored by the horizon cutoff is at most e^{-10} ≈ 5e-5 of ‖φ‖∞.
    pub fn validate(&self, c0: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParam(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= 10.0 / c0) {
            return Err(Error::InvalidParam(format!(
                "horizon {} too short for discount floor {c0}; need at least {}",
                self.horizon,
                10.0 / c0
            )));
        }
        if self.n_paths < 10_000 {
            return Err(Error::InvalidParam(format!(
                "n_paths must be at least 10^4, got {}",
                self.n_paths
            )));
        }
        if !(self.kill_radius > 0.0) {
            return Err(Error::InvalidParam(format!(
                "kill_radius must be positive, got {}",
                self.kill_radius
            )));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingRule {
    /// Stop at the first step whose nearest grid node is in contact.
    Contact,
    /// Stop at the first step with t >= the given time.
    FixedTime(f64),
    /// Stop on leaving the open interval (lo, hi).
    FirstExit { lo: f64, hi: f64 },
    /// Stop immediately; the estimate is φ(x0) with zero variance.
    StopNow,
    /// Never stop; every path runs into the horizon or the kill radius.
    Never,
}

impl StoppingRule {
    pub fn label(&self) -> String {
        match self {
            StoppingRule::Contact => "contact".into(),
            StoppingRule::FixedTime(t) => format!("fixed-t{t}"),
            StoppingRule::FirstExit { .. } => "first-exit".into(),
            StoppingRule::StopNow => "stop-at-0".into(),
            StoppingRule::Never => "never".into(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation / sqrt(n_paths).
    pub std_err: f64,
    pub n_paths: usize,
    pub rule: StoppingRule,
}

/// One increment of the symmetric 2s-stable process over dt, by the
/// Chambers-Mallows-Stuck transform, scaled so that the increment's
/// characteristic function is exp(-dt |ξ|^{2s}). The process built from
/// these increments is exactly the one generated by -(-Δ)^s in this
/// crate's normalization; there is no small-jump truncation to tune.
pub fn sample_stable_increment<R: Rng + ?Sized>(
    order: FractionalOrder,
    dt: f64,
    rng: &mut R,
) -> f64 {
    let alpha = order.stable_index();
    let u: f64 = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
    let w: f64 = rng.sample(Exp1);
    let z = (alpha * u).sin() / u.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha);
    dt.powf(1.0 / alpha) * z
}

/// A recorded trajectory: states X_k and left-endpoint discount sums
/// D_k = Σ_{j<k} c(X_j) dt at times k dt, truncated where the path left
/// the kill radius.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub discounts: Vec<f64>,
    pub killed: bool,
}

/// Euler stepping with a caller-supplied jump increment per step. The
/// closure hook exists so tests can switch the jumps off and check the
/// drift and discount arithmetic in isolation.
pub fn simulate_path_with<R, F>(
    x0: f64,
    coeffs: &CoefficientSpec,
    config: &PathConfig,
    rng: &mut R,
    mut increment: F,
) -> PathSample
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    let steps = config.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut discounts = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut d = 0.0;
    times.push(0.0);
    states.push(x);
    discounts.push(d);
    for k in 0..steps {
        d += coeffs.c().interp(x) * config.dt;
        x = x - coeffs.b().interp(x) * config.dt + increment(rng);
        times.push((k + 1) as f64 * config.dt);
        states.push(x);
        discounts.push(d);
        if x.abs() > config.kill_radius {
            return PathSample {
                times,
                states,
                discounts,
                killed: true,
            };
        }
    }
    PathSample {
        times,
        states,
        discounts,
        killed: false,
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    x0: f64,
    spec: &ProblemSpec,
    config: &PathConfig,
    rng: &mut R,
) -> PathSample {
    let order = spec.order();
    let dt = config.dt;
    simulate_path_with(x0, spec.coeffs(), config, rng, move |r| {
        sample_stable_increment(order, dt, r)
    })
}

fn run_path<R: Rng + ?Sized>(
    x0: f64,
    rule: StoppingRule,
    spec: &ProblemSpec,
    solution: &ObstacleSolution,
    config: &PathConfig,
    rng: &mut R,
) -> f64 {
    let grid = spec.grid();
    let phi = spec.obstacle();
    let coeffs = spec.coeffs();
    let order = spec.order();
    let dt = config.dt;
    let mut x = x0;
    let mut d = 0.0_f64;
    for k in 0..config.steps() {
        let stop = match rule {
            StoppingRule::StopNow => true,
            StoppingRule::FixedTime(tf) => k as f64 * dt >= tf,
            StoppingRule::Contact => solution.contact[grid.nearest(x)],
            StoppingRule::FirstExit { lo, hi } => x <= lo || x >= hi,
            StoppingRule::Never => false,
        };
        if stop {
            return (-d).exp() * phi.interp(x);
        }
        d += coeffs.c().interp(x) * dt;
        x = x - coeffs.b().interp(x) * dt + sample_stable_increment(order, dt, rng);
        if x.abs() > config.kill_radius {
            return 0.0;
        }
    }
    0.0
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Discounted-payoff estimate of the stopped process started at the grid
/// node x0. With `rule = Contact` this estimates the solution value u(x0);
/// any other rule estimates a lower bound.
pub fn value_at(
    x0: f64,
    rule: StoppingRule,
    spec: &ProblemSpec,
    solution: &ObstacleSolution,
    config: &PathConfig,
) -> Result<MCEstimate> {
    config.validate(spec.coeffs().c0())?;
    let grid = spec.grid();
    let node = grid.nearest(x0);
    if (grid.x(node) - x0).abs() > 1e-9 * grid.h() {
        return Err(Error::InvalidParam(format!(
            "probe point {x0} is not a grid node"
        )));
    }
    if rule == StoppingRule::Contact && !solution.contact.iter().any(|&c| c) {
        return Err(Error::Degenerate(
            "contact set is empty; probe with fixed-time rules instead".into(),
        ));
    }
    let payoffs: Vec<f64> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(p as u64);
            run_path(x0, rule, spec, solution, config, &mut rng)
        })
        .collect();
    let n = config.n_paths as f64;
    let mean = pairwise_sum(&payoffs) / n;
    let sq: Vec<f64> = payoffs.iter().map(|p| (p - mean) * (p - mean)).collect();
    let std_err = (pairwise_sum(&sq) / n).sqrt() / n.sqrt();
    Ok(MCEstimate {
        mean,
        std_err,
        n_paths: config.n_paths,
        rule,
    })
}

/// Runs the estimator under each alternative rule. Every entry should
/// satisfy mean <= u(x0) + 4 std_err + discretization allowance; the
/// caller owns the comparison because the allowance is instance-specific.
pub fn suboptimality_check(
    x0: f64,
    alt_rules: &[StoppingRule],
    spec: &ProblemSpec,
    solution: &ObstacleSolution,
    config: &PathConfig,
) -> Result<Vec<MCEstimate>> {
    alt_rules
        .iter()
        .map(|&rule| value_at(x0, rule, spec, solution, config))
        .collect()
}
