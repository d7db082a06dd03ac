//! Solves the disk problem with each scheme and prints the relative errors.
//!
//! cargo run --release --example solve_circle -- 80

use phifd::analysis::relative_errors;
use phifd::{assemble, builtin_case, CartesianGrid, Scheme, SchemeParams};

fn main() -> phifd::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(80);
    let case = builtin_case("circle2d", 2)?;
    let grid = CartesianGrid::unit(2, n)?;
    for scheme in Scheme::ALL {
        let params = SchemeParams::default_for(scheme);
        let system = assemble(&grid, &case, &params)?;
        let report = system.solve_direct()?;
        let e = relative_errors(&report.solution, &case, &system.classification)?;
        println!(
            "{scheme:>16}  N={n}  L2={:.4e}  Linf={:.4e}  H1={:.4e}  ({:.3}s)",
            e.l2, e.linf, e.h1, report.wall_time
        );
    }
    Ok(())
}
