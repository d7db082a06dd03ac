//! Coarse direct solve, spline transfer, fine BiCGSTAB, compared with a
//! BiCGSTAB run from zero.
//!
//! cargo run --release --example multigrid -- [dim] [N0] [N_obj]

use phifd::multigrid::{multigrid_solve, MultigridPlan};
use phifd::{builtin_case, Scheme, SchemeParams};

fn main() -> phifd::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let dim = args.first().copied().unwrap_or(2);
    let (n0, n_obj) = match (args.get(1), args.get(2)) {
        (Some(&a), Some(&b)) => (a, b),
        _ if dim == 3 => (50, 100),
        _ => (200, 800),
    };
    let case = builtin_case(if dim == 3 { "sphere3d" } else { "circle2d" }, dim)?;
    let mut plan = MultigridPlan::new(n0, n_obj, SchemeParams::default_for(Scheme::Phifd))?;
    plan.cold_baseline = true;
    let r = multigrid_solve(&case, &plan)?;
    println!("N0 = {n0}, N_obj = {n_obj}");
    println!("  interpolated start: L2 = {:.4e}", r.initial_errors.l2);
    println!(
        "  warm: L2 = {:.4e}, {} iterations, coarse {:.2}s + interp {:.2}s + fine {:.2}s = {:.2}s",
        r.errors.l2,
        r.iterations,
        r.t_coarse,
        r.t_interp,
        r.t_fine,
        r.total_time()
    );
    if let Some(c) = &r.cold {
        println!("  cold: L2 = {:.4e}, {} iterations, {:.2}s", c.errors.l2, c.iterations, c.time);
    }
    Ok(())
}
