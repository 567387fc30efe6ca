//! Numerical laboratory for nonlocal obstacle problems in one dimension.
//!
//! The operator is L = (-Δ)^s + b·∇ + c with s in (1/2, 1), applied on a
//! periodic box. The crate provides two independent discretizations of
//! (-Δ)^s (singular-integral quadrature and Fourier symbol), a penalized
//! obstacle solver with an LCP oracle, a jump-process Monte Carlo check of
//! the optimal-stopping representation, a weighted harmonic extension of
//! boundary traces to the upper half-plane, and frequency-function
//! diagnostics for the free boundary.

pub mod dense;
pub mod error;
pub mod extension;
pub mod frequency;
pub mod grid;
pub mod kernel;
pub mod linear;
pub mod obstacle;
pub mod operator;
pub mod problem;
pub mod stochastic;

pub use error::{Error, Result};
pub use extension::{
    ball_integral, dtn_check, height_function, omega_weight, poisson_extend, rellich_residual,
    surface_integral, DtnReport, ExtensionField, HalfSpaceGrid,
};
pub use frequency::{
    boundary_mean_check, default_growth_radii, frequency_curve, frequency_f, frequency_limit,
    frequency_phi, growth_exponent_fit, monotonicity_check, rescale, BoundaryMeanReport,
    FrequencyCurve, FrequencyLimit, FrequencyParams, LimitBranch, MonotonicityReport,
    RescaledField,
};
pub use grid::{gradient, FractionalOrder, GridSpec, ScalarField};
pub use kernel::{dtn_constant, normalization_constant, KernelTable};
pub use linear::{
    apply_l_quad, apply_l_spectral, comparison_check, interior_residual, solve_drifted,
    DriftSolveOpts, LinearSolveReport,
};
pub use obstacle::{
    beta_eps, lcp_oracle, obstacle_solve, penalized_solve, seeded_polish_solve, ObstacleOpts,
    ObstacleReport, ObstacleSolution, PenalizationOpts, PenalizationState,
};
pub use operator::{apply_quadrature, apply_spectral, SpectralOp};
pub use problem::{bump, named_obstacle, CoefficientSpec, ProblemSpec};
pub use stochastic::{
    sample_stable_increment, simulate_path, simulate_path_with, suboptimality_check, value_at,
    MCEstimate, PathConfig, PathSample, StoppingRule,
};
