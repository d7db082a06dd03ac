//! Level-set geometry, manufactured test cases and the Cartesian node grid.
//!
//! A domain is described by a scalar field `phi` with `Omega = {phi < 0}`.
//! Grids are uniform with the same spacing along every axis; nodes are
//! flattened with x fastest, then y, then z.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Scalar field of a point given as a slice of `dim` coordinates.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Analytic level-set function. The domain is the strict sub-level set
/// `{phi < 0}`; its zero set is the boundary.
#[derive(Clone)]
pub struct LevelSet {
    dim: usize,
    phi: ScalarFn,
}

impl LevelSet {
    pub fn new(dim: usize, phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        LevelSet {
            dim,
            phi: Arc::new(phi),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.phi)(p)
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        self.eval(p) < 0.0
    }

    /// Level set with the same domain reflected through the diagonal `x <-> y`.
    pub fn swap_xy(&self) -> LevelSet {
        let phi = self.phi.clone();
        LevelSet::new(self.dim, move |p: &[f64]| {
            let mut q = [0.0; 3];
            q[..p.len()].copy_from_slice(p);
            q.swap(0, 1);
            phi(&q[..p.len()])
        })
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSet").field("dim", &self.dim).finish()
    }
}

/// Uniform Cartesian grid over a box with equal side lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    dim: usize,
    n: usize,
    lower: [f64; 3],
    upper: [f64; 3],
    h: f64,
}

const MAX_DIM: usize = 3;

impl CartesianGrid {
    /// Builds the grid with `n` intervals per axis over `bounds` (one
    /// `(a_i, b_i)` pair per axis).
    pub fn new(bounds: &[(f64, f64)], n: usize) -> Result<Self> {
        let dim = bounds.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 intervals per axis, got {n}")));
        }
        let length = bounds[0].1 - bounds[0].0;
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("invalid axis interval {:?}", bounds[0])));
        }
        for (axis, &(a, b)) in bounds.iter().enumerate() {
            let l = b - a;
            if !l.is_finite() || (l - length).abs() > 1e-12 * length {
                return Err(Error::Config(format!(
                    "axis {axis} has length {l}, expected {length} (all axes must be equal)"
                )));
            }
        }
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        for (axis, &(a, b)) in bounds.iter().enumerate() {
            lower[axis] = a;
            upper[axis] = b;
        }
        Ok(CartesianGrid {
            dim,
            n,
            lower,
            upper,
            h: length / n as f64,
        })
    }

    /// Unit square or unit cube with `n` intervals per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        CartesianGrid::new(&vec![(0.0, 1.0); dim], n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of intervals per axis.
    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of nodes per axis, `n + 1`.
    pub fn nodes_per_axis(&self) -> usize {
        self.n + 1
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim).map(|a| (self.lower[a], self.upper[a])).collect()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// Flat-index offset of one step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis().pow(axis as u32)
    }

    /// Coordinate of node index `i` along `axis`. The last node sits exactly
    /// on the upper bound.
    #[inline]
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if i == self.n {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.h
        }
    }

    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        idx.iter().rev().fold(0, |acc, &i| acc * m + i)
    }

    #[inline]
    pub fn multi(&self, mut k: usize) -> [usize; 3] {
        let m = self.nodes_per_axis();
        let mut idx = [0; 3];
        for slot in idx.iter_mut().take(self.dim) {
            *slot = k % m;
            k /= m;
        }
        idx
    }

    /// Coordinates of flat node `k`; only the first `dim` entries are used.
    #[inline]
    pub fn point(&self, k: usize) -> [f64; 3] {
        let idx = self.multi(k);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.axis_coord(a, idx[a]);
        }
        p
    }

    /// Flat index of the neighbour of `k` one step along `axis` in direction
    /// `offset` (-1 or +1), or `None` outside the grid.
    #[inline]
    pub fn neighbor(&self, k: usize, axis: usize, offset: isize) -> Option<usize> {
        let m = self.nodes_per_axis();
        let s = self.stride(axis);
        let i = (k / s) % m;
        let j = i as isize + offset;
        if j < 0 || j >= m as isize {
            None
        } else {
            Some((k as isize + offset * s as isize) as usize)
        }
    }

    /// True when node `k` lies on a face of the bounding box.
    pub fn on_boundary(&self, k: usize) -> bool {
        let idx = self.multi(k);
        idx[..self.dim].iter().any(|&i| i == 0 || i == self.n)
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.node_count())
            .map(|k| {
                let p = self.point(k);
                f(&p[..self.dim])
            })
            .collect()
    }
}

/// Manufactured problem `-Laplace(u) = f` in `Omega`, `u = g` on the boundary.
#[derive(Clone)]
pub struct TestCase {
    pub name: String,
    pub levelset: LevelSet,
    pub exact: ScalarFn,
    pub source: ScalarFn,
    /// Boundary data; `None` means homogeneous.
    pub dirichlet: Option<ScalarFn>,
}

impl fmt::Debug for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestCase")
            .field("name", &self.name)
            .field("dim", &self.levelset.dim())
            .finish()
    }
}

impl TestCase {
    pub fn dim(&self) -> usize {
        self.levelset.dim()
    }

    pub fn exact(&self, p: &[f64]) -> f64 {
        (self.exact)(p)
    }

    pub fn source(&self, p: &[f64]) -> f64 {
        (self.source)(p)
    }

    pub fn dirichlet(&self, p: &[f64]) -> f64 {
        self.dirichlet.as_ref().map_or(0.0, |g| g(p))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.dirichlet.is_none()
    }
}

/// Radius of the 2D disc; the offset pushes the boundary a hair away from
/// grid nodes so that some crossings fall extremely close to a node.
pub const CIRCLE_RADIUS: f64 = 0.3 + 1e-10;
pub const SPHERE_RADIUS: f64 = 0.3;
/// Regularisation added under the square root of the radial distance.
pub const RADIAL_EPS: f64 = 1e-12;

/// Names accepted by [`builtin_case`].
pub const BUILTIN_CASES: [&str; 2] = ["circle2d", "sphere3d"];

/// Radially symmetric case `u = cos(K r)`, `K = pi / (2R)`, on a ball of
/// radius `R` centred in the unit box.
fn radial_cosine(name: &str, dim: usize, radius: f64) -> TestCase {
    let k = PI / (2.0 * radius);
    let r2 = |p: &[f64]| p.iter().map(|x| (x - 0.5) * (x - 0.5)).sum::<f64>();
    let rhat = move |p: &[f64]| (r2(p) + RADIAL_EPS).sqrt();
    // -Laplace cos(K r) = K^2 cos(K r) + (dim - 1) K sin(K r) / r
    let curvature = (dim - 1) as f64;
    TestCase {
        name: name.to_string(),
        levelset: LevelSet::new(dim, move |p| r2(p) - radius * radius),
        exact: Arc::new(move |p| (k * rhat(p)).cos()),
        source: Arc::new(move |p| {
            let r = rhat(p);
            k * k * (k * r).cos() + curvature * k * (k * r).sin() / r
        }),
        dirichlet: None,
    }
}

/// Looks up one of the built-in manufactured cases.
pub fn builtin_case(name: &str, dim: usize) -> Result<TestCase> {
    let (expected_dim, case) = match name {
        "circle2d" => (2, radial_cosine(name, 2, CIRCLE_RADIUS)),
        "sphere3d" => (3, radial_cosine(name, 3, SPHERE_RADIUS)),
        _ => {
            return Err(Error::Config(format!(
                "unknown case '{name}' (expected one of {BUILTIN_CASES:?})"
            )))
        }
    };
    if dim != expected_dim {
        return Err(Error::Config(format!(
            "case '{name}' is {expected_dim}D, requested dimension {dim}"
        )));
    }
    Ok(case)
}
