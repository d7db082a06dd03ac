//! Sensitivity of the error and the condition number to the stabilization
//! weight sigma.
//!
//! cargo run --release --example sweep

use phifd::experiments::{run_sweep, RunConfig};

fn main() -> phifd::Result<()> {
    let cfg = RunConfig {
        n_list: Some(vec![20, 40, 80]),
        sigma_list: Some(vec![0.01, 0.1, 1.0, 10.0]),
        condition: true,
        ..RunConfig::default()
    };
    for r in run_sweep(&cfg)? {
        println!(
            "sigma={:<5} N={:<3} L2={:.3e} H1={:.3e} kappa={:.1}",
            r.value,
            r.row.n,
            r.row.errors.l2,
            r.row.errors.h1,
            r.row.kappa.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
