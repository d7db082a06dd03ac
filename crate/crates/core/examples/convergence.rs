//! Convergence study with fitted orders.
//!
//! cargo run --release --example convergence -- [circle2d|sphere3d] [scheme]

use phifd::experiments::{run_convergence, RunConfig};

fn main() -> phifd::Result<()> {
    let mut args = std::env::args().skip(1);
    let case = args.next().unwrap_or_else(|| "circle2d".into());
    let scheme = args.next().unwrap_or_else(|| "phifd".into()).parse()?;
    let (dim, n_list) = if case == "sphere3d" {
        (3, vec![12, 16, 20, 24, 28, 32, 40])
    } else {
        (2, vec![10, 20, 40, 80, 160, 320])
    };
    let cfg = RunConfig {
        case,
        dim,
        scheme,
        n_list: Some(n_list),
        ..RunConfig::default()
    };
    let table = run_convergence(&cfg)?;
    println!("{:>5} {:>10} {:>12} {:>12} {:>12} {:>9}", "N", "h_plot", "L2", "Linf", "H1", "solve[s]");
    for r in table.rows() {
        println!(
            "{:>5} {:>10.5} {:>12.4e} {:>12.4e} {:>12.4e} {:>9.3}",
            r.n, r.h_plot, r.errors.l2, r.errors.linf, r.errors.h1, r.t_solve
        );
    }
    let o = table.orders()?;
    println!("fitted orders: L2 {:.3}  Linf {:.3}  H1 {:.3}", o.l2, o.linf, o.h1);
    for (i, p) in table.pairwise()?.iter().enumerate() {
        let r = &table.rows()[i + 1];
        println!("  N={:<4} pairwise: L2 {:.3}  Linf {:.3}  H1 {:.3}", r.n, p.l2, p.linf, p.h1);
    }
    Ok(())
}
