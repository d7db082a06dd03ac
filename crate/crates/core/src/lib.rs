//! Penalized finite differences for the Poisson problem `-Δu = f` on a domain
//! `{phi < 0}` embedded in a Cartesian grid, with homogeneous or
//! non-homogeneous Dirichlet data.

pub mod analysis;
pub mod assembly;
pub mod classify;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod multigrid;
pub mod solvers;
pub mod sparse;

pub use assembly::{assemble, Scheme, SchemeParams, SparseSystem};
pub use classify::{classify_nodes, Classification, NodeCategory};
pub use error::{Error, Result};
pub use geometry::{builtin_case, CartesianGrid, LevelSet, ScalarFn, TestCase};
pub use sparse::{CsrMatrix, TripletBuilder};
