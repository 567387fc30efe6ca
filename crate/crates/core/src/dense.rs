//! Dense assembly of L on the N periodic nodes, a policy iteration for
//! the complementarity system min{Lu, u - φ} = 0, and a projected
//! Gauss-Seidel oracle for small grids.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::kernel::KernelTable;
use crate::problem::CoefficientSpec;
use nalgebra::{DMatrix, DVector};

/// Full matrix of L = (-Δ)^s + b·∇ + c on the N = n-1 periodic nodes;
/// the difference form makes row sums equal c_i exactly.
pub fn dense_operator(table: &KernelTable, coeffs: &CoefficientSpec) -> DMatrix<f64> {
    let grid = table.grid();
    let nn = grid.n() - 1;
    let h = grid.h();
    let cns = table.cns();
    let w = table.weights();
    let diag = 2.0 * cns * w[1..].iter().sum::<f64>();
    let mut a = DMatrix::zeros(nn, nn);
    for i in 0..nn {
        a[(i, i)] += diag + coeffs.c().values()[i];
        for k in 1..=nn / 2 {
            let wk = cns * w[k];
            a[(i, (i + k) % nn)] -= wk;
            a[(i, (i + nn - k) % nn)] -= wk;
        }
        let bi = coeffs.b().values()[i];
        a[(i, (i + 1) % nn)] += bi / (2.0 * h);
        a[(i, (i + nn - 1) % nn)] -= bi / (2.0 * h);
    }
    a
}

/// Exact complementarity solve by active-set policy iteration.
///
/// Active rows are pinned to u = φ; a row leaves the active set when its
/// multiplier (Au)_i goes negative, an inactive node joins when the solve
/// pushes it below the obstacle. Finite termination in exact arithmetic;
/// the tiny thresholds stop cycling on roundoff.
pub fn policy_iteration(
    a: &DMatrix<f64>,
    phi: &[f64],
    initial_active: &[bool],
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<bool>, usize)> {
    let nn = a.nrows();
    assert_eq!(phi.len(), nn, "obstacle length must match matrix");
    let mut active = initial_active.to_vec();
    for it in 0..max_iter {
        let mut m = a.clone();
        let mut rhs = DVector::zeros(nn);
        for i in 0..nn {
            if active[i] {
                for j in 0..nn {
                    m[(i, j)] = 0.0;
                }
                m[(i, i)] = 1.0;
                rhs[i] = phi[i];
            }
        }
        let u = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Degenerate("singular policy-iteration system".into()))?;
        let lambda = a * &u;
        let mut next = active.clone();
        for i in 0..nn {
            if active[i] {
                next[i] = lambda[i] >= -1e-12;
            } else if u[i] < phi[i] - 1e-14 {
                next[i] = true;
            }
        }
        if next == active {
            let sol: Vec<f64> = (0..nn).map(|i| u[i].max(phi[i])).collect();
            return Ok((sol, active, it + 1));
        }
        active = next;
    }
    Err(Error::NoConvergence(format!(
        "active set still changing after {max_iter} policy iterations"
    )))
}

/// Projected Gauss-Seidel for min{Au, u - φ} = 0; the slow-but-simple
/// oracle used to validate the penalized solver on small grids.
pub fn pgs_lcp(
    a: &DMatrix<f64>,
    phi: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let nn = a.nrows();
    let mut u: Vec<f64> = phi.iter().map(|&p| p.max(0.0)).collect();
    for it in 0..max_iter {
        let mut delta = 0.0_f64;
        for i in 0..nn {
            let mut r = 0.0;
            for j in 0..nn {
                if j != i {
                    r -= a[(i, j)] * u[j];
                }
            }
            let unew = phi[i].max(r / a[(i, i)]);
            delta = delta.max((unew - u[i]).abs());
            u[i] = unew;
        }
        if delta < tol {
            return Ok((u, it + 1));
        }
    }
    Err(Error::NoConvergence(format!(
        "Gauss-Seidel sweep delta above {tol:.1e} after {max_iter} sweeps"
    )))
}

/// max_i |min{(Au)_i, (u-φ)_i}| on the periodic nodes, the residual of
/// the complementarity system under the quadrature route.
pub fn comp_residual_dense(a: &DMatrix<f64>, u: &ScalarField, phi: &ScalarField) -> f64 {
    let nn = a.nrows();
    let uv = DVector::from_iterator(nn, u.values()[..nn].iter().cloned());
    let res = a * &uv;
    (0..nn)
        .map(|i| {
            let slack = u.values()[i] - phi.values()[i];
            res[i].min(slack).abs()
        })
        .fold(0.0_f64, f64::max)
}
