//! Direct and iterative solves of the same system: the grid-aware
//! nested-dissection LU, the general sparse LU and BiCGSTAB from zero.
//!
//! cargo run --release --example solvers -- [dim] [N]

use std::time::Instant;

use phifd::analysis::relative_errors;
use phifd::solvers::{bicgstab, direct_solve, BicgstabOptions, GridLu};
use phifd::{assemble, builtin_case, CartesianGrid, Scheme, SchemeParams};

fn main() -> phifd::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let dim = args.first().copied().unwrap_or(2);
    let n = args.get(1).copied().unwrap_or(if dim == 3 { 40 } else { 400 });
    let case = builtin_case(if dim == 3 { "sphere3d" } else { "circle2d" }, dim)?;
    let grid = CartesianGrid::unit(dim, n)?;
    let system = assemble(&grid, &case, &SchemeParams::default_for(Scheme::Phifd))?;
    println!("N={n}, {} unknowns, {} nonzeros", system.dim(), system.matrix.nnz());

    let t = Instant::now();
    let lu = GridLu::new(&system.matrix, &grid)?;
    let t_factor = t.elapsed().as_secs_f64();
    let u = lu.solve(&system.rhs)?;
    let e = relative_errors(&u, &case, &system.classification)?;
    println!(
        "nested dissection: factor {t_factor:.2}s, largest front {}, {} stored entries, L2={:.4e}",
        lu.max_front, lu.factor_entries, e.l2
    );

    let r = direct_solve(&system.matrix, &system.rhs)?;
    let e = relative_errors(&r.solution, &case, &system.classification)?;
    println!("sparse LU:         {:.2}s, L2={:.4e}", r.wall_time, e.l2);

    let x0 = vec![0.0; system.dim()];
    let r = bicgstab(&system.matrix, &system.rhs, &x0, BicgstabOptions { tol: 1e-8, maxiter: 100_000 })?;
    let e = relative_errors(&r.solution, &case, &system.classification)?;
    println!("bicgstab:          {:.2}s, {} iterations, L2={:.4e}", r.wall_time, r.iterations, e.l2);
    Ok(())
}
