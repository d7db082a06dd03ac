//! Sparse system assembly for the penalized schemes and the Shortley-Weller
//! baseline.
//!
//! All systems live on the full node grid, flattened with x fastest. Nodes
//! that take part in no equation get an identity row with zero right-hand
//! side.

mod phifd;
mod phifd2;
mod shortley_weller;

use std::fmt;
use std::str::FromStr;

pub use phifd::{assemble_phifd, phifd_blocks, PhiFdBlocks};
pub use phifd2::{assemble_phifd2, penalty_triple_coefficients};
pub use shortley_weller::{assemble_sw, sw_coefficients, THETA_MIN};

use crate::classify::{classify_nodes, Classification};
use crate::error::{Error, Result};
use crate::geometry::{CartesianGrid, ScalarFn, TestCase};
use crate::solvers::{grid_direct_solve, SolveReport};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Two-point penalty on cut edges, second-difference ghost penalty.
    Phifd,
    /// Three-point penalty on node triples, third-difference ghost penalty.
    Phifd2,
    /// Unequal-arm finite differences.
    ShortleyWeller,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Phifd, Scheme::Phifd2, Scheme::ShortleyWeller];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Phifd => "phifd",
            Scheme::Phifd2 => "phifd2",
            Scheme::ShortleyWeller => "shortley_weller",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "phifd" => Ok(Scheme::Phifd),
            "phifd2" => Ok(Scheme::Phifd2),
            "shortley_weller" | "sw" => Ok(Scheme::ShortleyWeller),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected phifd, phifd2 or shortley_weller)"
            ))),
        }
    }
}

/// Penalty weight `gamma`, stabilization weight `sigma` and the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub gamma: f64,
    pub sigma: f64,
    pub scheme: Scheme,
}

pub const DEFAULT_SIGMA: f64 = 0.01;

impl SchemeParams {
    pub fn new(scheme: Scheme, gamma: f64, sigma: f64) -> Result<Self> {
        let p = SchemeParams { gamma, sigma, scheme };
        p.validate()?;
        Ok(p)
    }

    /// `gamma = 1` for phifd, `gamma = 10` for phifd2, `sigma = 0.01`.
    pub fn default_for(scheme: Scheme) -> Self {
        SchemeParams {
            gamma: Self::default_gamma(scheme),
            sigma: DEFAULT_SIGMA,
            scheme,
        }
    }

    pub fn default_gamma(scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Phifd2 => 10.0,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Assembled linear system over all grid nodes.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub classification: Classification,
    pub params: SchemeParams,
    /// Nodes that received an identity row.
    pub padded: Vec<bool>,
}

impl SparseSystem {
    pub fn grid(&self) -> &CartesianGrid {
        &self.classification.grid
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Direct solve with the nested-dissection multifrontal LU.
    pub fn solve_direct(&self) -> Result<SolveReport> {
        grid_direct_solve(&self.matrix, self.grid(), &self.rhs)
    }
}

/// Classifies `grid` against the case geometry and assembles the requested
/// scheme, including the boundary-data term for non-homogeneous cases.
pub fn assemble(grid: &CartesianGrid, case: &TestCase, params: &SchemeParams) -> Result<SparseSystem> {
    params.validate()?;
    let cls = classify_nodes(grid, &case.levelset)?;
    assemble_classified(cls, case, params)
}

/// Same as [`assemble`] with a precomputed classification.
pub fn assemble_classified(cls: Classification, case: &TestCase, params: &SchemeParams) -> Result<SparseSystem> {
    params.validate()?;
    match params.scheme {
        Scheme::Phifd => {
            let system = assemble_phifd(cls, case, params)?;
            match &case.dirichlet {
                Some(g) => dirichlet_rhs(system, g),
                None => Ok(system),
            }
        }
        Scheme::Phifd2 => {
            if !case.is_homogeneous() {
                return Err(Error::Config(
                    "phifd2 supports homogeneous Dirichlet data only".into(),
                ));
            }
            assemble_phifd2(cls, case, params)
        }
        Scheme::ShortleyWeller => assemble_sw(cls, case, params),
    }
}

/// Adds the boundary-data contribution of the cut-edge penalty to the
/// right-hand side of a phifd system, with `g` sampled at the nodes.
pub fn dirichlet_rhs(mut system: SparseSystem, g: &ScalarFn) -> Result<SparseSystem> {
    if system.params.scheme != Scheme::Phifd {
        return Err(Error::Config(format!(
            "boundary-data term is defined for phifd, not {}",
            system.params.scheme
        )));
    }
    let cls = &system.classification;
    let grid = &cls.grid;
    let h2 = grid.spacing() * grid.spacing();
    let gamma = system.params.gamma;
    let dim = grid.dim();
    for (axis, edges) in cls.cut_edges.iter().enumerate() {
        let s = grid.stride(axis);
        for &a in edges {
            let b = a + s;
            let (pa, pb) = (cls.phi[a], cls.phi[b]);
            let sum = pa * pa + pb * pb;
            let (xa, xb) = (grid.point(a), grid.point(b));
            let (ga, gb) = (g(&xa[..dim]), g(&xb[..dim]));
            let num = pb * ga - pa * gb;
            system.rhs[a] += gamma / h2 * pb * num / sum;
            system.rhs[b] -= gamma / h2 * pa * num / sum;
        }
    }
    Ok(system)
}

/// Evaluates the source at inside nodes; zero elsewhere.
pub(crate) fn inside_source(cls: &Classification, case: &TestCase) -> Vec<f64> {
    let grid = &cls.grid;
    let dim = grid.dim();
    (0..grid.node_count())
        .map(|k| {
            if cls.inside[k] {
                let p = grid.point(k);
                case.source(&p[..dim])
            } else {
                0.0
            }
        })
        .collect()
}

/// Appends identity rows for nodes not yet touched by any row entry and
/// returns the padded mask.
pub(crate) fn pad_untouched(t: &mut TripletBuilder, touched: &[bool]) -> Vec<bool> {
    let padded: Vec<bool> = touched.iter().map(|&b| !b).collect();
    for (k, &p) in padded.iter().enumerate() {
        if p {
            t.push(k, k, 1.0);
        }
    }
    padded
}

/// Pushes `w * c c^T` over `nodes`, marking them touched.
#[inline]
pub(crate) fn push_rank_one(t: &mut TripletBuilder, touched: &mut [bool], nodes: &[usize], coef: &[f64], w: f64) {
    for (a, &ra) in nodes.iter().enumerate() {
        touched[ra] = true;
        for (b, &cb) in nodes.iter().enumerate() {
            t.push(ra, cb, w * coef[a] * coef[b]);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::classify::classify_relaxed;
    use crate::geometry::LevelSet;

    fn strip_case(g: Option<ScalarFn>) -> TestCase {
        TestCase {
            name: "strip".into(),
            levelset: LevelSet::new(2, |p| (p[0] - 0.5).abs() - 0.25),
            exact: Arc::new(|_| 0.0),
            source: Arc::new(|p| 1.0 + p[1]),
            dirichlet: g,
        }
    }

    fn strip_system(scheme: Scheme, g: Option<ScalarFn>) -> SparseSystem {
        let grid = CartesianGrid::unit(2, 10).unwrap();
        let case = strip_case(g);
        let cls = classify_relaxed(&grid, &case.levelset).unwrap();
        assemble_classified(cls, &case, &SchemeParams::default_for(scheme)).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("SW".parse::<Scheme>().unwrap(), Scheme::ShortleyWeller);
        assert!("fem".parse::<Scheme>().is_err());
    }

    #[test]
    fn params_defaults_and_validation() {
        let p = SchemeParams::default_for(Scheme::Phifd);
        assert_eq!((p.gamma, p.sigma), (1.0, 0.01));
        let p = SchemeParams::default_for(Scheme::Phifd2);
        assert_eq!((p.gamma, p.sigma), (10.0, 0.01));
        assert!(SchemeParams::new(Scheme::Phifd, 0.0, 0.01).is_err());
        assert!(SchemeParams::new(Scheme::Phifd, 1.0, -1.0).is_err());
    }

    #[test]
    fn strip_interior_row() {
        let sys = strip_system(Scheme::Phifd, None);
        let g = sys.grid().clone();
        let k = g.flat(&[5, 5]);
        let mut row: Vec<(usize, f64)> = sys.matrix.row(k).collect();
        row.sort_by_key(|e| e.0);
        let want = [(g.flat(&[5, 4]), -100.0), (g.flat(&[4, 5]), -100.0), (k, 400.0), (g.flat(&[6, 5]), -100.0), (g.flat(&[5, 6]), -100.0)];
        assert_eq!(row.len(), 5);
        for ((c, v), (wc, wv)) in row.iter().zip(want) {
            assert_eq!(*c, wc);
            assert!((v - wv).abs() < 1e-9, "{v} vs {wv}");
        }
        assert!((sys.rhs[k] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn strip_cut_edge_penalty() {
        let grid = CartesianGrid::unit(2, 10).unwrap();
        let case = strip_case(None);
        let cls = classify_relaxed(&grid, &case.levelset).unwrap();
        let blocks = phifd_blocks(&cls, &SchemeParams::default_for(Scheme::Phifd));
        let (a, b) = (grid.flat(&[2, 5]), grid.flat(&[3, 5]));
        assert!((blocks.penalty.get(a, a) - 50.0).abs() < 1e-9);
        assert!((blocks.penalty.get(b, b) - 50.0).abs() < 1e-9);
        assert!((blocks.penalty.get(a, b) - 50.0).abs() < 1e-9);
        assert!((blocks.penalty.get(b, a) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_single_edge_arithmetic() {
        let zero = strip_system(Scheme::Phifd, None);
        let one = strip_system(Scheme::Phifd, Some(Arc::new(|_| 1.0)));
        let g = zero.grid().clone();
        let (a, b) = (g.flat(&[2, 5]), g.flat(&[3, 5]));
        assert!((one.rhs[a] - zero.rhs[a] - 100.0).abs() < 1e-9);
        assert!((one.rhs[b] - zero.rhs[b] - 100.0).abs() < 1e-9);
        let same = strip_system(Scheme::Phifd, Some(Arc::new(|_| 0.0)));
        assert_eq!(same.rhs, zero.rhs);
    }

    #[test]
    fn phifd2_rejects_boundary_data() {
        let grid = CartesianGrid::unit(2, 10).unwrap();
        let case = strip_case(Some(Arc::new(|_| 1.0)));
        let cls = classify_relaxed(&grid, &case.levelset).unwrap();
        let err = assemble_classified(cls, &case, &SchemeParams::default_for(Scheme::Phifd2)).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn triple_kernel_on_linear_multiples_of_phi() {
        for hp in [0.1, 0.013, 2.5] {
            let phi = [-2.0 * hp, -hp, hp];
            let (c, den) = penalty_triple_coefficients(phi[0], phi[1], phi[2]);
            assert!(den > 0.0);
            for (p0, p1) in [(1.0, 0.0), (0.3, -2.0), (-4.0, 7.5)] {
                let h = 0.1;
                let u = [(p0 - p1 * h) * phi[0], p0 * phi[1], (p0 + p1 * h) * phi[2]];
                let r: f64 = c.iter().zip(u).map(|(a, b)| a * b).sum();
                let scale: f64 = c.iter().zip(u).map(|(a, b)| (a * b).abs()).sum();
                assert!(r.abs() <= 1e-14 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn shortley_weller_coefficients() {
        let (d, m, p) = sw_coefficients(0.1, 1.0, 1.0);
        assert!((d - 200.0).abs() < 1e-9 && (m + 100.0).abs() < 1e-9 && (p + 100.0).abs() < 1e-9);
        let (d, m, p) = sw_coefficients(0.1, 1.0, 0.5);
        assert!((d - 400.0).abs() < 1e-9);
        assert!((m + 2.0 / (0.1 * 0.15)).abs() < 1e-9);
        assert!((p + 2.0 / (0.05 * 0.15)).abs() < 1e-9);
    }

    #[test]
    fn exterior_rows_are_identity() {
        for scheme in Scheme::ALL {
            let sys = strip_system(scheme, None);
            let cls = &sys.classification;
            for k in (0..sys.dim()).filter(|&k| cls.exterior[k]) {
                let row: Vec<_> = sys.matrix.row(k).filter(|e| e.1 != 0.0).collect();
                assert_eq!(row, vec![(k, 1.0)], "{scheme} row {k}");
                assert_eq!(sys.rhs[k], 0.0);
                assert!(sys.padded[k]);
            }
        }
    }

    #[test]
    fn matrix_market_export_round_trips() {
        let sys = strip_system(Scheme::Phifd2, None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        sys.matrix.write_matrix_market(&path).unwrap();
        let back = CsrMatrix::read_matrix_market(&path).unwrap();
        assert_eq!(back, sys.matrix);
    }
}
