//! Coarse-to-fine warm start: direct solve on a coarse grid, quadratic spline
//! transfer to the fine grid, BiCGSTAB on the fine grid.

use std::time::Instant;

use crate::analysis::{relative_errors, ErrorTriple};
use crate::assembly::{assemble, SchemeParams};
use crate::error::{Error, Result};
use crate::geometry::{CartesianGrid, TestCase};
use crate::solvers::{bicgstab, BicgstabOptions};

const DEGREE: usize = 2;

/// Quadratic interpolating spline on the nodes of one axis.
///
/// Knots: triple end knots and the midpoints of all node intervals except
/// the first and the last, which gives one basis function per node.
#[derive(Debug, Clone)]
struct AxisSpline {
    knots: Vec<f64>,
    /// Collocation matrix in band storage, `band[i][2 + j - i]` for column j.
    lu: Vec<[f64; 5]>,
}

impl AxisSpline {
    fn new(nodes: &[f64]) -> Result<Self> {
        let m = nodes.len();
        if m < 4 {
            return Err(Error::Config(format!(
                "quadratic spline needs at least 3 intervals, got {}",
                m.saturating_sub(1)
            )));
        }
        let (a, b) = (nodes[0], nodes[m - 1]);
        let mut knots = vec![a; DEGREE + 1];
        knots.extend((1..m - 2).map(|i| 0.5 * (nodes[i] + nodes[i + 1])));
        knots.extend([b; DEGREE + 1]);
        debug_assert_eq!(knots.len(), m + DEGREE + 1);

        let mut lu = vec![[0.0; 5]; m];
        let mut s = Self { knots, lu: Vec::new() };
        for (i, &x) in nodes.iter().enumerate() {
            let (span, vals) = s.basis(x);
            for (r, v) in vals.into_iter().enumerate() {
                let j = span - DEGREE + r;
                let off = 2 + j as isize - i as isize;
                if v != 0.0 {
                    debug_assert!((0..5).contains(&off));
                    lu[i][off as usize] = v;
                }
            }
        }
        // banded elimination without pivoting; the collocation matrix is
        // totally positive
        for k in 0..m {
            let piv = lu[k][2];
            if piv.abs() < 1e-14 {
                return Err(Error::Singular("spline collocation pivot vanished".into()));
            }
            for i in k + 1..(k + 3).min(m) {
                let l = lu[i][(2 + k) - i];
                if l == 0.0 {
                    continue;
                }
                let f = l / piv;
                lu[i][(2 + k) - i] = f;
                for j in k + 1..(k + 3).min(m) {
                    lu[i][(2 + j) - i] -= f * lu[k][(2 + j) - k];
                }
            }
        }
        s.lu = lu;
        Ok(s)
    }

    fn size(&self) -> usize {
        self.lu.len()
    }

    /// Span index `i` with `t_i <= x < t_{i+1}` and the values of the basis
    /// functions `i-2, i-1, i` at `x`.
    fn basis(&self, x: f64) -> (usize, [f64; 3]) {
        let t = &self.knots;
        let m = t.len() - DEGREE - 1;
        let span = if x >= t[m] {
            m - 1
        } else {
            (t.partition_point(|&k| k <= x) - 1).clamp(DEGREE, m - 1)
        };
        let mut n = [1.0, 0.0, 0.0];
        let mut left = [0.0; 3];
        let mut right = [0.0; 3];
        for j in 1..=DEGREE {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        (span, n)
    }

    /// Overwrites nodal values with spline coefficients.
    fn solve(&self, y: &mut [f64]) {
        let m = self.size();
        for i in 0..m {
            for k in i.saturating_sub(2)..i {
                y[i] -= self.lu[i][(2 + k) - i] * y[k];
            }
        }
        for i in (0..m).rev() {
            for j in i + 1..(i + 3).min(m) {
                y[i] -= self.lu[i][(2 + j) - i] * y[j];
            }
            y[i] /= self.lu[i][2];
        }
    }
}

/// Precomputed evaluation stencils of one axis spline at a set of points.
struct AxisMap {
    spline: AxisSpline,
    stencils: Vec<(usize, [f64; 3])>,
}

impl AxisMap {
    fn new(coarse: &[f64], fine: &[f64]) -> Result<Self> {
        let spline = AxisSpline::new(coarse)?;
        let stencils = fine.iter().map(|&x| spline.basis(x)).collect();
        Ok(Self { spline, stencils })
    }

    fn apply(&self, line: &mut [f64], out: &mut [f64]) {
        self.spline.solve(line);
        for (o, &(span, w)) in out.iter_mut().zip(&self.stencils) {
            *o = w[0] * line[span - 2] + w[1] * line[span - 1] + w[2] * line[span];
        }
    }
}

fn axis_nodes(grid: &CartesianGrid, axis: usize) -> Vec<f64> {
    (0..grid.nodes_per_axis()).map(|i| grid.axis_coord(axis, i)).collect()
}

/// Tensor-product quadratic spline interpolation of a node field from
/// `coarse` to `fine`. Both grids must have the same dimension and the fine
/// box must lie within the coarse one.
pub fn spline_interpolate(values: &[f64], coarse: &CartesianGrid, fine: &CartesianGrid) -> Result<Vec<f64>> {
    let dim = coarse.dim();
    if fine.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: fine.dim(),
        });
    }
    if values.len() != coarse.node_count() {
        return Err(Error::DimensionMismatch {
            expected: coarse.node_count(),
            found: values.len(),
        });
    }
    let mut shape: Vec<usize> = vec![coarse.nodes_per_axis(); dim];
    let mut data = values.to_vec();
    for axis in 0..dim {
        let fine_nodes = axis_nodes(fine, axis);
        let map = AxisMap::new(&axis_nodes(coarse, axis), &fine_nodes)?;
        let (mc, mf) = (shape[axis], fine_nodes.len());
        let stride: usize = shape[..axis].iter().product();
        let outer: usize = shape[axis + 1..].iter().product();
        let mut next = vec![0.0; stride * mf * outer];
        let mut line = vec![0.0; mc];
        let mut out = vec![0.0; mf];
        for o in 0..outer {
            for s in 0..stride {
                let base_in = o * stride * mc + s;
                let base_out = o * stride * mf + s;
                for i in 0..mc {
                    line[i] = data[base_in + i * stride];
                }
                map.apply(&mut line, &mut out);
                for i in 0..mf {
                    next[base_out + i * stride] = out[i];
                }
            }
        }
        shape[axis] = mf;
        data = next;
    }
    Ok(data)
}

/// Coarse resolution, target resolution and fine-solver settings.
#[derive(Debug, Clone, Copy)]
pub struct MultigridPlan {
    pub n0: usize,
    pub n_obj: usize,
    pub tol: f64,
    pub maxiter: usize,
    pub params: SchemeParams,
    /// Also run BiCGSTAB from a zero initial guess for comparison.
    pub cold_baseline: bool,
}

impl MultigridPlan {
    pub fn new(n0: usize, n_obj: usize, params: SchemeParams) -> Result<Self> {
        let plan = MultigridPlan {
            n0,
            n_obj,
            tol: 1e-4,
            maxiter: 100_000,
            params,
            cold_baseline: false,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 < 2 || self.n_obj <= self.n0 {
            return Err(Error::Config(format!(
                "multigrid needs N_obj > N0 >= 2, got N0 = {}, N_obj = {}",
                self.n0, self.n_obj
            )));
        }
        if !(self.tol > 0.0) || self.maxiter == 0 {
            return Err(Error::Config("multigrid needs tol > 0 and maxiter > 0".into()));
        }
        self.params.validate()
    }
}

/// Fine-grid results of one cold BiCGSTAB run.
#[derive(Debug, Clone)]
pub struct ColdRun {
    pub errors: ErrorTriple,
    pub iterations: usize,
    pub time: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct MultigridReport {
    pub n0: usize,
    pub n_obj: usize,
    pub solution: Vec<f64>,
    /// Errors of the final fine solution.
    pub errors: ErrorTriple,
    /// Errors of the interpolated coarse solution on the fine grid.
    pub initial_errors: ErrorTriple,
    pub iterations: usize,
    pub converged: bool,
    pub t_coarse: f64,
    pub t_interp: f64,
    pub t_fine: f64,
    pub cold: Option<ColdRun>,
}

impl MultigridReport {
    /// Solve plus interpolation time; assembly is excluded.
    pub fn total_time(&self) -> f64 {
        self.t_coarse + self.t_interp + self.t_fine
    }

    pub const CSV_HEADER: &'static str =
        "N0,N_obj,err_l2,err_linf,err_h1,iters_warm,iters_cold,t_coarse,t_interp,t_fine,t_cold";

    pub fn csv_line(&self) -> String {
        let (ic, tc) = match &self.cold {
            Some(c) => (c.iterations.to_string(), format!("{:.6}", c.time)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{:e},{:e},{:e},{},{},{:.6},{:.6},{:.6},{}",
            self.n0,
            self.n_obj,
            self.errors.l2,
            self.errors.linf,
            self.errors.h1,
            self.iterations,
            ic,
            self.t_coarse,
            self.t_interp,
            self.t_fine,
            tc
        )
    }
}

/// Runs the three-step cascade on the unit box.
pub fn multigrid_solve(case: &TestCase, plan: &MultigridPlan) -> Result<MultigridReport> {
    plan.validate()?;
    let dim = case.dim();
    let coarse_grid = CartesianGrid::unit(dim, plan.n0)?;
    let fine_grid = CartesianGrid::unit(dim, plan.n_obj)?;

    let coarse = assemble(&coarse_grid, case, &plan.params)?;
    let u0 = coarse.solve_direct()?;
    let t_coarse = u0.wall_time;
    drop(coarse);

    let start = Instant::now();
    let u1 = spline_interpolate(&u0.solution, &coarse_grid, &fine_grid)?;
    let t_interp = start.elapsed().as_secs_f64();

    let fine = assemble(&fine_grid, case, &plan.params)?;
    let cls = &fine.classification;
    let initial_errors = relative_errors(&u1, case, cls)?;
    let opts = BicgstabOptions {
        tol: plan.tol,
        maxiter: plan.maxiter,
    };
    let warm = bicgstab(&fine.matrix, &fine.rhs, &u1, opts)?;
    if !warm.converged {
        log::warn!("warm-start BiCGSTAB stopped at the iteration cap ({})", plan.maxiter);
    }
    let errors = relative_errors(&warm.solution, case, cls)?;

    let cold = if plan.cold_baseline {
        let zero = vec![0.0; fine.dim()];
        let c = bicgstab(&fine.matrix, &fine.rhs, &zero, opts)?;
        Some(ColdRun {
            errors: relative_errors(&c.solution, case, cls)?,
            iterations: c.iterations,
            time: c.wall_time,
            converged: c.converged,
        })
    } else {
        None
    };

    Ok(MultigridReport {
        n0: plan.n0,
        n_obj: plan.n_obj,
        errors,
        initial_errors,
        iterations: warm.iterations,
        converged: warm.converged,
        t_coarse,
        t_interp,
        t_fine: warm.wall_time,
        solution: warm.solution,
        cold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * b[j]).sum();
            b[i] = (b[i] - s) / a[i][i];
        }
        b
    }

    /// Interpolant in the truncated power basis 1, x, x^2, (x - k)_+^2.
    fn power_basis_interpolant(nodes: &[f64], y: &[f64], knots: &[f64]) -> impl Fn(f64) -> f64 {
        let row = |x: f64, knots: &[f64]| -> Vec<f64> {
            let mut r = vec![1.0, x, x * x];
            r.extend(knots.iter().map(|&k| (x - k).max(0.0).powi(2)));
            r
        };
        let a: Vec<Vec<f64>> = nodes.iter().map(|&x| row(x, knots)).collect();
        let c = dense_solve(a, y.to_vec());
        let knots = knots.to_vec();
        move |x| row(x, &knots).iter().zip(&c).map(|(p, q)| p * q).sum()
    }

    #[test]
    fn axis_spline_matches_power_basis() {
        // x^3 varies along x only, so every row of the 2D transfer is the
        // 1D spline interpolant
        let g0 = CartesianGrid::unit(2, 10).unwrap();
        let g1 = CartesianGrid::unit(2, 20).unwrap();
        let nodes = axis_nodes(&g0, 0);
        let y: Vec<f64> = nodes.iter().map(|x| x * x * x).collect();
        let interior: Vec<f64> = (1..9).map(|i| 0.5 * (nodes[i] + nodes[i + 1])).collect();
        let oracle = power_basis_interpolant(&nodes, &y, &interior);
        let coarse: Vec<f64> = (0..g0.node_count()).map(|k| y[g0.multi(k)[0]]).collect();
        let got = spline_interpolate(&coarse, &g0, &g1).unwrap();
        for (k, v) in got.iter().enumerate() {
            let x = g1.axis_coord(0, g1.multi(k)[0]);
            assert!((v - oracle(x)).abs() < 1e-8, "x = {x}: {v} vs {}", oracle(x));
        }
    }

    #[test]
    fn reproduces_quadratics_in_2d() {
        let g0 = CartesianGrid::unit(2, 7).unwrap();
        let g1 = CartesianGrid::unit(2, 23).unwrap();
        let q = |p: &[f64]| p[0] * p[0] + p[1] * p[1] - 0.3 * p[0] * p[1] + 1.0;
        let out = spline_interpolate(&g0.sample(q), &g0, &g1).unwrap();
        let want = g1.sample(q);
        let err = out.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn coinciding_nodes_keep_values() {
        let g0 = CartesianGrid::unit(2, 10).unwrap();
        let g1 = CartesianGrid::unit(2, 30).unwrap();
        let f = |p: &[f64]| (3.0 * p[0]).sin() * (1.0 + p[1]).ln();
        let out = spline_interpolate(&g0.sample(f), &g0, &g1).unwrap();
        let v0 = g0.sample(f);
        for i in 0..=10 {
            for j in 0..=10 {
                let a = v0[g0.flat(&[i, j])];
                let b = out[g1.flat(&[3 * i, 3 * j])];
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_in_3d_and_small_grids() {
        let g0 = CartesianGrid::unit(3, 4).unwrap();
        let g1 = CartesianGrid::unit(3, 9).unwrap();
        let out = spline_interpolate(&vec![2.5; g0.node_count()], &g0, &g1).unwrap();
        assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-13));
        let g2 = CartesianGrid::unit(2, 2).unwrap();
        let g3 = CartesianGrid::unit(2, 4).unwrap();
        assert!(spline_interpolate(&vec![0.0; 9], &g2, &g3).is_err());
    }

    #[test]
    fn plan_validation() {
        let p = SchemeParams::default_for(crate::assembly::Scheme::Phifd);
        assert!(MultigridPlan::new(10, 10, p).is_err());
        assert!(MultigridPlan::new(1, 10, p).is_err());
        assert_eq!(MultigridPlan::new(10, 40, p).unwrap().tol, 1e-4);
    }
}
