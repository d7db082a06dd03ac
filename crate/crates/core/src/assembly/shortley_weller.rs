use crate::classify::Classification;
use crate::error::Result;
use crate::geometry::TestCase;
use crate::sparse::TripletBuilder;

use super::{inside_source, SchemeParams, SparseSystem};

/// Smallest admissible arm fraction; shorter arms are clamped with a warning.
pub const THETA_MIN: f64 = 1e-12;

/// Diagonal and off-diagonal weights of the unequal-arm second difference
/// with arms `theta_minus * h` and `theta_plus * h`.
///
/// Returns `(diag, minus, plus)`; the off-diagonals are negative.
pub fn sw_coefficients(h: f64, theta_minus: f64, theta_plus: f64) -> (f64, f64, f64) {
    let hm = theta_minus * h;
    let hp = theta_plus * h;
    let diag = 2.0 / (hm * hp);
    let minus = -2.0 / (hm * (hm + hp));
    let plus = -2.0 / (hp * (hm + hp));
    (diag, minus, plus)
}

pub fn assemble_sw(cls: Classification, case: &TestCase, params: &SchemeParams) -> Result<SparseSystem> {
    let grid = &cls.grid;
    let n = grid.node_count();
    let dim = grid.dim();
    let h = grid.spacing();
    let mut rhs = inside_source(&cls, case);
    let mut t = TripletBuilder::with_capacity(n, (2 * dim + 1) * cls.inside_count() + n);
    let mut clamped = 0usize;

    for k in 0..n {
        if !cls.inside[k] {
            t.push(k, k, 1.0);
            continue;
        }
        let x = grid.point(k);
        for axis in 0..dim {
            // (neighbour, theta) on each side; a cut arm has no neighbour term
            let mut arms = [(None, 1.0); 2];
            for (slot, o) in [-1isize, 1].into_iter().enumerate() {
                let Some(nb) = grid.neighbor(k, axis, o) else {
                    continue;
                };
                if cls.inside[nb] {
                    arms[slot] = (Some(nb), 1.0);
                } else {
                    let (pa, pn) = (cls.phi[k], cls.phi[nb]);
                    let mut theta = pa / (pa - pn);
                    if !(theta >= THETA_MIN) {
                        theta = THETA_MIN;
                        clamped += 1;
                    }
                    arms[slot] = (None, theta.min(1.0));
                }
            }
            let (diag, minus, plus) = sw_coefficients(h, arms[0].1, arms[1].1);
            t.push(k, k, diag);
            for ((nb, theta), (w, o)) in arms.into_iter().zip([(minus, -1.0), (plus, 1.0)]) {
                match nb {
                    Some(nb) => t.push(k, nb, w),
                    None => {
                        let mut xb = x;
                        xb[axis] += o * theta * h;
                        rhs[k] -= w * case.dirichlet(&xb[..dim]);
                    }
                }
            }
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} Shortley-Weller arms clamped to theta = {THETA_MIN}");
    }

    let padded = cls.inside.iter().map(|&b| !b).collect();
    Ok(SparseSystem {
        matrix: t.build(),
        rhs,
        classification: cls,
        params: *params,
        padded,
    })
}
