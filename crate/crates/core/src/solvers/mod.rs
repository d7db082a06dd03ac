//! Sparse linear solvers: direct LU, unpreconditioned BiCGSTAB and a
//! 2-norm condition number estimator.

mod bicgstab;
mod condition;
mod direct;
mod multifrontal;

use std::fmt;

pub use bicgstab::{bicgstab, BicgstabOptions};
pub use condition::{condition_estimate, ConditionEstimate, CONDITION_MAXITER, CONDITION_TOL};
pub use direct::{direct_solve, LuFactorization};
pub use multifrontal::{grid_direct_solve, GridLu};

use crate::sparse::{norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Bicgstab,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Direct => "direct",
            SolveMethod::Bicgstab => "bicgstab",
        })
    }
}

/// Outcome of one linear solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// 0 for direct solves.
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned solution.
    pub relative_residual: f64,
    /// Seconds spent in the solver.
    pub wall_time: f64,
    pub method: SolveMethod,
    /// False when an iterative solve hit its iteration cap.
    pub converged: bool,
}

/// `||b - A x||_2 / ||b||_2`, or `||A x||_2` when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).expect("dimensions checked by caller");
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let nb = norm2(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}
