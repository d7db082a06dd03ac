use crate::classify::Classification;
use crate::error::{Error, Result};
use crate::geometry::TestCase;
use crate::sparse::TripletBuilder;

use super::{inside_source, pad_untouched, push_rank_one, SchemeParams, SparseSystem};

const WINDOW: [f64; 4] = [-1.0, 3.0, -3.0, 1.0];

/// Coefficients of the three-point penalty on an axis triple `(m, c, p)` and
/// their squared norm.
///
/// Up to the factor `-phi_m phi_c phi_p` this is the second difference of
/// `u / phi`, so it vanishes on `u = phi * w` for `w` linear along the axis.
pub fn penalty_triple_coefficients(phi_m: f64, phi_c: f64, phi_p: f64) -> ([f64; 3], f64) {
    let c = [-phi_c * phi_p, 2.0 * phi_p * phi_m, -phi_c * phi_m];
    let den = 4.0 * phi_p * phi_p * phi_m * phi_m
        + phi_c * phi_c * phi_m * phi_m
        + phi_c * phi_c * phi_p * phi_p;
    (c, den)
}

/// A run of consecutive axis nodes takes part in the boundary terms when
/// none of its nodes is exterior and exactly one of its edges is cut.
fn crosses_once(cls: &Classification, nodes: &[usize]) -> bool {
    nodes.iter().all(|&k| !cls.exterior[k])
        && nodes.windows(2).filter(|e| cls.inside[e[0]] != cls.inside[e[1]]).count() == 1
}

/// Axis run of `len` nodes starting `before` steps behind `k`.
fn axis_run<const L: usize>(cls: &Classification, k: usize, axis: usize, before: isize) -> Option<[usize; L]> {
    let mut out = [0; L];
    for (i, o) in out.iter_mut().enumerate() {
        *o = cls.grid.neighbor(k, axis, i as isize - before)?;
    }
    Some(out)
}

pub fn assemble_phifd2(cls: Classification, case: &TestCase, params: &SchemeParams) -> Result<SparseSystem> {
    let grid = &cls.grid;
    let n = grid.node_count();
    let dim = grid.dim();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut t = TripletBuilder::with_capacity(n, (2 * dim + 1) * cls.inside_count() + 25 * cls.cut_edge_count());
    let mut touched = vec![false; n];

    for k in (0..n).filter(|&k| cls.inside[k]) {
        touched[k] = true;
        t.push(k, k, 2.0 * dim as f64 * inv_h2);
        for axis in 0..dim {
            for o in [-1, 1] {
                if let Some(nb) = grid.neighbor(k, axis, o) {
                    t.push(k, nb, -inv_h2);
                }
            }
        }
    }

    let w_pen = params.gamma * inv_h2;
    let w_stab = params.sigma * inv_h2;
    for axis in 0..dim {
        for k in (0..n).filter(|&k| cls.in_omega_h[k]) {
            if let Some(tri) = axis_run::<3>(&cls, k, axis, 1).filter(|r| crosses_once(&cls, r)) {
                let [m, c, p] = tri;
                let (coef, den) = penalty_triple_coefficients(cls.phi[m], cls.phi[c], cls.phi[p]);
                if den == 0.0 {
                    return Err(Error::Assembly(format!(
                        "degenerate penalty triple at node {:?} along axis {axis}",
                        &grid.multi(c)[..dim]
                    )));
                }
                push_rank_one(&mut t, &mut touched, &tri, &coef, w_pen / den);
            }
            if let Some(win) = axis_run::<4>(&cls, k, axis, 1).filter(|r| crosses_once(&cls, r)) {
                push_rank_one(&mut t, &mut touched, &win, &WINDOW, w_stab);
            }
        }
    }

    let padded = pad_untouched(&mut t, &touched);
    let rhs = inside_source(&cls, case);
    Ok(SparseSystem {
        matrix: t.build(),
        rhs,
        classification: cls,
        params: *params,
        padded,
    })
}
