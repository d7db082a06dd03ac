//! Property checks shared by the proptest suite and the acceptance runner.
//! Each returns `Err` with a short description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phifd::analysis::discrete_norms;
use phifd::assembly::{
    penalty_triple_coefficients, phifd_blocks, Scheme, SchemeParams, SparseSystem,
};
use phifd::classify::classify_relaxed;
use phifd::multigrid::spline_interpolate;
use phifd::solvers::{bicgstab, direct_solve, BicgstabOptions};
use phifd::{assemble, CartesianGrid, Classification, CsrMatrix, LevelSet, TestCase};

pub type Check = Result<(), String>;

/// Disc of radius `r` centred at `(cx, cy)` with a unit source.
pub fn disc_case(cx: f64, cy: f64, r: f64) -> TestCase {
    TestCase {
        name: "disc".into(),
        levelset: LevelSet::new(2, move |p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2) - r * r),
        exact: Arc::new(|_| 0.0),
        source: Arc::new(|_| 1.0),
        dirichlet: None,
    }
}

pub fn disc_system(n: usize, cx: f64, cy: f64, r: f64, scheme: Scheme) -> SparseSystem {
    let grid = CartesianGrid::unit(2, n).unwrap();
    assemble(&grid, &disc_case(cx, cy, r), &SchemeParams::default_for(scheme)).unwrap()
}

fn quad_form(a: &CsrMatrix, v: &[f64]) -> f64 {
    let av = a.spmv(v).unwrap();
    av.iter().zip(v).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The cut-edge penalty annihilates every multiple of the level set.
pub fn penalty_kernel(cls: &Classification, c: f64) -> Check {
    let b = phifd_blocks(cls, &SchemeParams::default_for(Scheme::Phifd)).penalty;
    let u: Vec<f64> = cls.phi.iter().map(|p| c * p).collect();
    let bu = b.spmv(&u).unwrap();
    let scale = max_abs(b.values()) * max_abs(&u);
    let worst = max_abs(&bu);
    if worst <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
        Ok(())
    } else {
        Err(format!("|B (c phi)| = {worst:e} against scale {scale:e}"))
    }
}

/// The triple coefficients vanish on `(p0 + p1 x) phi` for any phi values.
pub fn triple_kernel(phi: [f64; 3], p0: f64, p1: f64, h: f64) -> Check {
    let (c, _) = penalty_triple_coefficients(phi[0], phi[1], phi[2]);
    let u: Vec<f64> = (0..3).map(|i| (p0 + p1 * (i as f64 - 1.0) * h) * phi[i]).collect();
    let r: f64 = c.iter().zip(&u).map(|(a, b)| a * b).sum();
    let scale: f64 = c.iter().zip(&u).map(|(a, b)| (a * b).abs()).sum();
    if r.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
        Ok(())
    } else {
        Err(format!("triple residual {r:e} against scale {scale:e}"))
    }
}

/// `v^T A v > 0` for `count` random vectors supported on non-exterior nodes.
pub fn coercivity(sys: &SparseSystem, seed: u64, count: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cls = &sys.classification;
    for trial in 0..count {
        let v: Vec<f64> = cls
            .exterior
            .iter()
            .map(|&e| if e { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let q = quad_form(&sys.matrix, &v);
        if !(q > 0.0) {
            return Err(format!("trial {trial}: v^T A v = {q:e}"));
        }
    }
    Ok(())
}

/// Penalty and stabilization blocks are symmetric and their sum is
/// positive semidefinite on random vectors.
pub fn blocks_symmetric_psd(cls: &Classification, seed: u64) -> Check {
    let b = phifd_blocks(cls, &SchemeParams::default_for(Scheme::Phifd));
    for (name, m) in [("penalty", &b.penalty), ("stabilization", &b.stabilization)] {
        if !m.is_symmetric(1e-14) {
            return Err(format!("{name} block asymmetry {:e}", m.asymmetry()));
        }
    }
    let bj = b.penalty.add(&b.stabilization).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let v: Vec<f64> = (0..bj.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = quad_form(&bj, &v);
        let scale = bj.norm_fro() * v.iter().map(|x| x * x).sum::<f64>();
        if q < -1e-12 * scale {
            return Err(format!("v^T (B + J) v = {q:e}"));
        }
    }
    Ok(())
}

/// Shortley-Weller inside rows: positive diagonal, non-positive
/// off-diagonals, non-negative row sums, strict somewhere.
pub fn sw_m_matrix(sys: &SparseSystem) -> Check {
    let cls = &sys.classification;
    let mut strict = false;
    for k in (0..sys.dim()).filter(|&k| cls.inside[k]) {
        let mut diag = 0.0;
        let mut sum = 0.0;
        for (c, v) in sys.matrix.row(k) {
            if c == k {
                diag += v;
            } else if v > 0.0 {
                return Err(format!("row {k}: positive off-diagonal {v:e} at column {c}"));
            }
            sum += v;
        }
        if !(diag > 0.0) {
            return Err(format!("row {k}: diagonal {diag:e}"));
        }
        if sum < -1e-9 * diag {
            return Err(format!("row {k}: negative row sum {sum:e}"));
        }
        strict |= sum > 1e-9 * diag;
    }
    if strict {
        Ok(())
    } else {
        Err("no strictly dominant row".into())
    }
}

/// The inside-row Laplacian reproduces `-Laplace q` for a quadratic `q`.
pub fn stencil_quadratic(cls: &Classification, a: [f64; 2], b: [f64; 2], c: f64) -> Check {
    let lap = phifd_blocks(cls, &SchemeParams::default_for(Scheme::Phifd)).laplacian;
    let q = cls
        .grid
        .sample(|p| a[0] * p[0] * p[0] + a[1] * p[1] * p[1] + b[0] * p[0] + b[1] * p[1] + c);
    let lq = lap.spmv(&q).unwrap();
    let want = -2.0 * (a[0] + a[1]);
    let h2 = cls.grid.spacing().powi(2);
    let tol = 1e-9 * (max_abs(&q) / h2).max(1.0);
    for k in (0..q.len()).filter(|&k| cls.inside[k]) {
        if (lq[k] - want).abs() > tol {
            return Err(format!("node {k}: {:e} vs {want:e}", lq[k]));
        }
    }
    Ok(())
}

/// Quadratic spline transfer reproduces quadratics on the fine grid.
pub fn spline_quadratic(n0: usize, n1: usize, a: [f64; 3]) -> Check {
    let q = |p: &[f64]| a[0] * p[0] * p[0] + a[1] * p[0] * p[1] + a[2] * p[1] * p[1] - p[0];
    let g0 = CartesianGrid::unit(2, n0).unwrap();
    let g1 = CartesianGrid::unit(2, n1).unwrap();
    let got = spline_interpolate(&g0.sample(q), &g0, &g1).map_err(|e| e.to_string())?;
    let want = g1.sample(q);
    let err = got.iter().zip(&want).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if err < 1e-10 {
        Ok(())
    } else {
        Err(format!("max spline error {err:e}"))
    }
}

/// Absolute homogeneity and the triangle inequality for all three norms.
pub fn norm_properties(cls: &Classification, seed: u64, alpha: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cls.phi.len();
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nu = discrete_norms(&u, cls).unwrap().as_array();
    let nv = discrete_norms(&v, cls).unwrap().as_array();
    let au: Vec<f64> = u.iter().map(|x| alpha * x).collect();
    let uv: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + y).collect();
    let nau = discrete_norms(&au, cls).unwrap().as_array();
    let nuv = discrete_norms(&uv, cls).unwrap().as_array();
    for i in 0..3 {
        if (nau[i] - alpha.abs() * nu[i]).abs() > 1e-12 * nau[i].max(1e-300) {
            return Err(format!("norm {i}: |a u| = {:e}, |a| |u| = {:e}", nau[i], alpha.abs() * nu[i]));
        }
        if nuv[i] > (nu[i] + nv[i]) * (1.0 + 1e-12) {
            return Err(format!("norm {i}: |u + v| = {:e} > {:e}", nuv[i], nu[i] + nv[i]));
        }
    }
    Ok(())
}

/// BiCGSTAB at `tol` and the direct solve agree within 1e-3 in max norm.
pub fn direct_vs_iterative(sys: &SparseSystem, tol: f64) -> Check {
    let d = direct_solve(&sys.matrix, &sys.rhs).map_err(|e| e.to_string())?;
    let zero = vec![0.0; sys.dim()];
    let opts = BicgstabOptions { tol, maxiter: 100_000 };
    let it = bicgstab(&sys.matrix, &sys.rhs, &zero, opts).map_err(|e| e.to_string())?;
    if !it.converged {
        return Err(format!("BiCGSTAB stopped after {} iterations", it.iterations));
    }
    let diff = d.solution.iter().zip(&it.solution).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff <= 1e-3 {
        Ok(())
    } else {
        Err(format!("max |u_direct - u_bicgstab| = {diff:e}"))
    }
}

/// Every classified set agrees with a direct enumeration over nodes.
pub fn classification_brute_force(grid: &CartesianGrid, ls: &LevelSet) -> Check {
    let cls = classify_relaxed(grid, ls).map_err(|e| e.to_string())?;
    let n = grid.nodes_per_axis() as isize;
    let dim = grid.dim();
    let coords = |k: usize| grid.multi(k);
    let at = |i: [isize; 3]| -> Option<usize> {
        if i[..dim].iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let idx: Vec<usize> = i[..dim].iter().map(|&c| c as usize).collect();
        Some(grid.flat(&idx))
    };
    let inside = |k: usize| {
        let p = grid.point(k);
        ls.eval(&p[..dim]) < 0.0
    };
    for k in 0..grid.node_count() {
        let m = coords(k);
        let base = [m[0] as isize, m[1] as isize, m[2] as isize];
        let mut touches = false;
        for axis in 0..dim {
            let mut plus = base;
            plus[axis] += 1;
            let mut minus = base;
            minus[axis] -= 1;
            let nb = |i| at(i).map(inside);
            let cut = nb(plus).is_some_and(|v| v != inside(k));
            if cut != cls.cut_edges[axis].binary_search(&k).is_ok() {
                return Err(format!("node {k}: cut edge along axis {axis}"));
            }
            touches |= nb(plus).is_some_and(|v| v) || nb(minus).is_some_and(|v| v);
            let stab = inside(k) && (nb(plus) == Some(false) || nb(minus) == Some(false));
            if stab != cls.stab_nodes[axis].binary_search(&k).is_ok() {
                return Err(format!("node {k}: stabilization along axis {axis}"));
            }
        }
        if cls.inside[k] != inside(k) {
            return Err(format!("node {k}: inside flag"));
        }
        if cls.exterior[k] != (!inside(k) && !touches) {
            return Err(format!("node {k}: exterior flag"));
        }
    }
    Ok(())
}

/// The boundary-data term equals the penalty block applied to sampled data.
pub fn dirichlet_shift(n: usize, g: [f64; 3]) -> Check {
    let grid = CartesianGrid::unit(2, n).unwrap();
    let params = SchemeParams::default_for(Scheme::Phifd);
    let mut case = disc_case(0.5, 0.5, 0.3);
    let zero = assemble(&grid, &case, &params).map_err(|e| e.to_string())?;
    let gf = move |p: &[f64]| g[0] + g[1] * p[0] + g[2] * p[1];
    case.dirichlet = Some(Arc::new(gf));
    let shifted = assemble(&grid, &case, &params).map_err(|e| e.to_string())?;
    let bg = phifd_blocks(&zero.classification, &params)
        .penalty
        .spmv(&grid.sample(gf))
        .unwrap();
    let scale = max_abs(&bg).max(1.0);
    for k in 0..zero.dim() {
        let d = shifted.rhs[k] - zero.rhs[k];
        if (d - bg[k]).abs() > 1e-10 * scale {
            return Err(format!("node {k}: rhs shift {d:e} vs B g {:e}", bg[k]));
        }
    }
    Ok(())
}
