//! A user-defined domain with non-homogeneous boundary data: an ellipse with
//! `u = exp(x) sin(y)`, which is harmonic, so `f = 0` and `g = u`.
//!
//! cargo run --release --example custom_levelset -- 160

use std::sync::Arc;

use phifd::analysis::relative_errors;
use phifd::{assemble, CartesianGrid, LevelSet, Scheme, SchemeParams, TestCase};

fn main() -> phifd::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(160);
    let exact = |p: &[f64]| p[0].exp() * p[1].sin();
    let case = TestCase {
        name: "ellipse".into(),
        levelset: LevelSet::new(2, |p| {
            let (x, y) = ((p[0] - 0.5) / 0.35, (p[1] - 0.5) / 0.2);
            x * x + y * y - 1.0
        }),
        exact: Arc::new(exact),
        source: Arc::new(|_| 0.0),
        dirichlet: Some(Arc::new(exact)),
    };
    let grid = CartesianGrid::unit(2, n)?;
    for scheme in [Scheme::Phifd, Scheme::ShortleyWeller] {
        let system = assemble(&grid, &case, &SchemeParams::default_for(scheme))?;
        let u = system.solve_direct()?.solution;
        let e = relative_errors(&u, &case, &system.classification)?;
        println!("{scheme:>16}  N={n}  L2={:.4e}  Linf={:.4e}  H1={:.4e}", e.l2, e.linf, e.h1);
    }
    Ok(())
}
