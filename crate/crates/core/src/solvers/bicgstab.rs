use std::time::Instant;

use super::{relative_residual, SolveMethod, SolveReport};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy)]
pub struct BicgstabOptions {
    /// Stop once the recurrence residual satisfies `||r|| <= tol ||b||`.
    pub tol: f64,
    pub maxiter: usize,
}

impl Default for BicgstabOptions {
    fn default() -> Self {
        BicgstabOptions {
            tol: 1e-4,
            maxiter: 100_000,
        }
    }
}

#[inline]
fn tiny(a: &[f64], b: &[f64]) -> f64 {
    f64::EPSILON * f64::EPSILON * norm2(a) * norm2(b)
}

enum Outcome {
    Converged,
    MaxIter,
    Breakdown(usize, &'static str),
}

/// Unpreconditioned BiCGSTAB (van der Vorst). Updates `x` in place and
/// counts iterations into `iters`.
fn iterate(a: &CsrMatrix, b: &[f64], x: &mut [f64], target: f64, maxiter: usize, iters: &mut usize) -> Outcome {
    let n = b.len();
    let mut r = a.spmv(x).expect("dimensions checked");
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    if norm2(&r) <= target {
        return Outcome::Converged;
    }
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);

    while *iters < maxiter {
        *iters += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= tiny(&r_hat, &r) {
            return Outcome::Breakdown(*iters, "rho vanished");
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.spmv_into(&p, &mut v).expect("dimensions checked");
        let rv = dot(&r_hat, &v);
        if rv.abs() <= tiny(&r_hat, &v) {
            return Outcome::Breakdown(*iters, "r_hat . v vanished");
        }
        alpha = rho_new / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            return Outcome::Converged;
        }
        a.spmv_into(&s, &mut t).expect("dimensions checked");
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        if omega.abs() <= f64::EPSILON * f64::EPSILON {
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            return Outcome::Breakdown(*iters, "omega vanished");
        }
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            return Outcome::Converged;
        }
        rho = rho_new;
    }
    Outcome::MaxIter
}

/// Solves `a x = b` from the initial guess `x0`.
///
/// A breakdown restarts the recurrence once from the current iterate; a
/// second breakdown is an error. Hitting `maxiter` returns a report with
/// `converged == false`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x0: &[f64], opts: BicgstabOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("BiCGSTAB tolerance must be positive, got {}", opts.tol)));
    }
    for len in [b.len(), x0.len()] {
        if len != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: len,
            });
        }
    }
    let start = Instant::now();
    let mut x = x0.to_vec();
    let nb = norm2(b);
    let mut iters = 0;
    let converged = if nb == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        true
    } else {
        let target = opts.tol * nb;
        let mut restarted = false;
        loop {
            match iterate(a, b, &mut x, target, opts.maxiter, &mut iters) {
                Outcome::Converged => break true,
                Outcome::MaxIter => break false,
                Outcome::Breakdown(at, reason) => {
                    if restarted {
                        return Err(Error::Breakdown { iterations: at, reason });
                    }
                    log::warn!("BiCGSTAB breakdown at iteration {at} ({reason}); restarting");
                    restarted = true;
                }
            }
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    if !converged {
        log::warn!("BiCGSTAB did not reach tol {} in {} iterations", opts.tol, opts.maxiter);
    }
    let relative_residual = relative_residual(a, &x, b);
    Ok(SolveReport {
        solution: x,
        iterations: iters,
        relative_residual,
        wall_time,
        method: SolveMethod::Bicgstab,
        converged,
    })
}
