//! Solves the sphere problem and writes the node field as VTK and CSV for
//! viewing in ParaView.
//!
//! cargo run --release --example export_field -- 40 /tmp/sphere.vtk

use std::path::PathBuf;

use phifd::experiments::export_field;
use phifd::{assemble, builtin_case, CartesianGrid, Scheme, SchemeParams};

fn main() -> phifd::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(40);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "sphere.vtk".into()));
    let case = builtin_case("sphere3d", 3)?;
    let grid = CartesianGrid::unit(3, n)?;
    let system = assemble(&grid, &case, &SchemeParams::default_for(Scheme::Phifd))?;
    let u = system.solve_direct()?.solution;
    let csv = export_field(&u, &grid, &path)?;
    println!("wrote {} and {}", path.display(), csv.display());
    Ok(())
}
