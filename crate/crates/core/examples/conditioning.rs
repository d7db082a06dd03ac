//! Condition numbers of the penalized systems against the mesh size.
//!
//! cargo run --release --example conditioning

use phifd::analysis::{fit_order, plotted_h};
use phifd::solvers::{condition_estimate, CONDITION_MAXITER, CONDITION_TOL};
use phifd::{assemble, builtin_case, CartesianGrid, Scheme, SchemeParams};

fn main() -> phifd::Result<()> {
    let case = builtin_case("circle2d", 2)?;
    for scheme in [Scheme::Phifd, Scheme::Phifd2] {
        let params = SchemeParams::default_for(scheme);
        let mut points = Vec::new();
        for n in [10, 20, 40, 80] {
            let grid = CartesianGrid::unit(2, n)?;
            let system = assemble(&grid, &case, &params)?;
            let est = condition_estimate(&system.matrix, CONDITION_TOL, CONDITION_MAXITER)?;
            println!(
                "{scheme:>7} N={n:<3} kappa={:.1} (sigma_max={:.4e}, sigma_min={:.4e})",
                est.kappa, est.sigma_max, est.sigma_min
            );
            points.push((plotted_h(grid.spacing()), est.kappa));
        }
        println!("{scheme:>7} slope of log kappa vs log h: {:.3}", fit_order(&points)?);
    }
    Ok(())
}
