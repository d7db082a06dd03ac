use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LuFactorization;
use crate::error::Result;
use crate::sparse::{dot, norm2, CsrMatrix};

pub const CONDITION_TOL: f64 = 1e-6;
pub const CONDITION_MAXITER: usize = 10_000;
const START_SEED: u64 = 0x5EED_C0DE;

/// Extremal singular values and their ratio.
#[derive(Debug, Clone, Copy)]
pub struct ConditionEstimate {
    pub kappa: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub iterations_max: usize,
    pub iterations_min: usize,
    pub converged: bool,
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    x
}

/// Power iteration for the dominant eigenvalue of a symmetric positive
/// semi-definite operator. Returns `(eigenvalue, iterations, converged)`.
fn power_iteration(
    n: usize,
    tol: f64,
    maxiter: usize,
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(f64, usize, bool)> {
    let mut x = start_vector(n);
    let mut lambda = 0.0f64;
    for it in 1..=maxiter {
        let y = apply(&x)?;
        let next = dot(&x, &y);
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok((0.0, it, true));
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return Ok((next, it, true));
        }
        lambda = next;
    }
    Ok((lambda, maxiter, false))
}

/// Estimates `kappa_2(A) = sigma_max / sigma_min`.
///
/// `sigma_max^2` is the dominant eigenvalue of `A^T A` (power iteration);
/// `sigma_min^-2` is the dominant eigenvalue of `(A A^T)^-1`, applied
/// through the LU factors.
pub fn condition_estimate(a: &CsrMatrix, tol: f64, maxiter: usize) -> Result<ConditionEstimate> {
    let n = a.dim();
    let at = a.transpose();
    let (lmax, iterations_max, ok_max) = power_iteration(n, tol, maxiter, |x| {
        let y = a.spmv(x)?;
        at.spmv(&y)
    })?;
    let lu = LuFactorization::new(a)?;
    let (lmin_inv, iterations_min, ok_min) = power_iteration(n, tol, maxiter, |x| {
        let y = lu.solve(x)?;
        lu.solve_transpose(&y)
    })?;
    let converged = ok_max && ok_min;
    if !converged {
        log::warn!("condition estimate did not converge to tol {tol} within {maxiter} iterations");
    }
    let sigma_max = lmax.sqrt();
    let sigma_min = 1.0 / lmin_inv.sqrt();
    Ok(ConditionEstimate {
        kappa: sigma_max / sigma_min,
        sigma_max,
        sigma_min,
        iterations_max,
        iterations_min,
        converged,
    })
}
