use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseRowMatRef, SymbolicSparseRowMatRef};
use faer::Mat;

use super::{relative_residual, SolveMethod, SolveReport};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Residual above which a completed factorization is treated as singular.
const SINGULAR_RESIDUAL: f64 = 1e-6;

/// Sparse LU with partial pivoting and a fill-reducing column ordering.
pub struct LuFactorization {
    dim: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for LuFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactorization").field("dim", &self.dim).finish()
    }
}

impl LuFactorization {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let symbolic = SymbolicSparseRowMatRef::new_checked(n, n, a.row_offsets(), None, a.col_indices());
        let mat = SparseRowMatRef::new(symbolic, a.values());
        // faer panics on an exactly zero pivot instead of returning an error
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| mat.sp_lu()))
            .map_err(|_| Error::Singular("zero pivot during LU factorization".into()))?
            .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;
        Ok(LuFactorization { dim: n, lu })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn run(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: b.len(),
            });
        }
        let mut rhs = Mat::<f64>::from_fn(self.dim, 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(rhs.as_mut());
        } else {
            self.lu.solve_in_place(rhs.as_mut());
        }
        let x: Vec<f64> = (0..self.dim).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("zero pivot in LU factors".into()));
        }
        Ok(x)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.run(b, false)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.run(b, true)
    }
}

/// Relative residual of a direct solution, or an error when it is too
/// large for the factorization to be trusted.
pub(crate) fn check_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let res = relative_residual(a, x, b);
    if res <= SINGULAR_RESIDUAL {
        Ok(res)
    } else {
        Err(Error::Singular(format!("relative residual {res:e} after LU solve")))
    }
}

/// Rows whose only entry is a nonzero diagonal and whose column is empty
/// elsewhere. These unknowns solve on their own.
pub(crate) fn decoupled_rows(a: &CsrMatrix) -> Vec<bool> {
    let n = a.dim();
    let mut coupled_col = vec![false; n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j != i && v != 0.0 {
                coupled_col[j] = true;
            }
        }
    }
    (0..n)
        .map(|i| {
            let mut nz = a.row(i).filter(|e| e.1 != 0.0);
            !coupled_col[i] && matches!((nz.next(), nz.next()), (Some((j, _)), None) if j == i)
        })
        .collect()
}

/// Factorizes `a` and solves `a x = b`. Decoupled diagonal rows, such as
/// the identity rows of exterior nodes, are eliminated before the
/// factorization.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<SolveReport> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let start = Instant::now();
    let free = decoupled_rows(a);
    let mut solution = vec![0.0; a.dim()];
    let kept: Vec<usize> = (0..a.dim()).filter(|&i| !free[i]).collect();
    for i in (0..a.dim()).filter(|&i| free[i]) {
        solution[i] = b[i] / a.get(i, i);
    }
    if !kept.is_empty() {
        let mut local = vec![usize::MAX; a.dim()];
        for (l, &i) in kept.iter().enumerate() {
            local[i] = l;
        }
        let mut t = TripletBuilder::with_capacity(kept.len(), a.nnz());
        for (l, &i) in kept.iter().enumerate() {
            for (j, v) in a.row(i) {
                // columns of free rows hold nothing but explicit zeros here
                if local[j] != usize::MAX {
                    t.push(l, local[j], v);
                }
            }
        }
        let sub = t.build();
        let rhs: Vec<f64> = kept.iter().map(|&i| b[i]).collect();
        let x = LuFactorization::new(&sub)?.solve(&rhs)?;
        for (l, &i) in kept.iter().enumerate() {
            solution[i] = x[l];
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    let res = check_residual(a, &solution, b)?;
    Ok(SolveReport {
        solution,
        iterations: 0,
        relative_residual: res,
        wall_time,
        method: SolveMethod::Direct,
        converged: true,
    })
}
