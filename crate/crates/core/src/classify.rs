//! Node and edge classification.
//!
//! Every node falls in exactly one category: inside (`phi < 0`), cut (outside
//! but joined to an inside node by a grid edge), or exterior. Cut edges are
//! the edges whose endpoints have different inside flags; the stabilization
//! set along an axis holds the inside nodes with at least one outside
//! neighbour along that axis.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CartesianGrid, LevelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeCategory {
    Inside,
    Cut,
    Exterior,
}

impl fmt::Display for NodeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeCategory::Inside => "inside",
            NodeCategory::Cut => "cut",
            NodeCategory::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub grid: CartesianGrid,
    pub phi: Vec<f64>,
    pub inside: Vec<bool>,
    pub in_omega_h: Vec<bool>,
    /// Per axis, anchors `k` of cut edges `k -> k + e_axis`, ascending.
    pub cut_edges: Vec<Vec<usize>>,
    /// Per axis, inside nodes with an outside neighbour along that axis, ascending.
    pub stab_nodes: Vec<Vec<usize>>,
    pub exterior: Vec<bool>,
}

impl Classification {
    pub fn category(&self, k: usize) -> NodeCategory {
        if self.inside[k] {
            NodeCategory::Inside
        } else if self.exterior[k] {
            NodeCategory::Exterior
        } else {
            NodeCategory::Cut
        }
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn cut_edge_count(&self) -> usize {
        self.cut_edges.iter().map(Vec::len).sum()
    }

    /// Writes `i,j[,k],category,phi` for every node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let dim = self.grid.dim();
        let header = if dim == 2 { "i,j,category,phi" } else { "i,j,k,category,phi" };
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{header}")?;
            for n in 0..self.grid.node_count() {
                let idx = self.grid.multi(n);
                for i in &idx[..dim] {
                    write!(w, "{i},")?;
                }
                writeln!(w, "{},{:e}", self.category(n), self.phi[n])?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Classifies all nodes of `grid` against the domain `{phi < 0}`.
///
/// A node with `phi == 0` is outside. Inside nodes must not touch the box
/// boundary so that every inside node has its full axis stencil.
pub fn classify_nodes(grid: &CartesianGrid, ls: &LevelSet) -> Result<Classification> {
    let c = classify_relaxed(grid, ls)?;
    if let Some(k) = (0..c.inside.len()).find(|&k| c.inside[k] && grid.on_boundary(k)) {
        return Err(Error::NotEmbedded {
            index: grid.multi(k)[..grid.dim()].to_vec(),
        });
    }
    Ok(c)
}

/// Same sets as [`classify_nodes`] without the embedding check. Neighbours
/// beyond the box are ignored rather than counted as outside.
pub fn classify_relaxed(grid: &CartesianGrid, ls: &LevelSet) -> Result<Classification> {
    if ls.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: ls.dim(),
        });
    }
    let dim = grid.dim();
    let phi = grid.sample(|p| ls.eval(p));
    if let Some(k) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!(
            "level set is not finite at node {:?}",
            &grid.multi(k)[..dim]
        )));
    }
    let inside: Vec<bool> = phi.iter().map(|&v| v < 0.0).collect();
    if !inside.iter().any(|&b| b) {
        return Err(Error::EmptyDomain);
    }

    let count = grid.node_count();
    let mut in_omega_h = inside.clone();
    let mut cut_edges = vec![Vec::new(); dim];
    let mut stab_nodes = vec![Vec::new(); dim];
    for axis in 0..dim {
        for k in 0..count {
            let Some(next) = grid.neighbor(k, axis, 1) else {
                continue;
            };
            if inside[k] != inside[next] {
                cut_edges[axis].push(k);
                in_omega_h[k] = true;
                in_omega_h[next] = true;
            }
        }
        for k in (0..count).filter(|&k| inside[k]) {
            let outside = |o| grid.neighbor(k, axis, o).is_some_and(|n| !inside[n]);
            if outside(-1) || outside(1) {
                stab_nodes[axis].push(k);
            }
        }
    }
    let exterior = in_omega_h.iter().map(|&b| !b).collect();

    Ok(Classification {
        grid: grid.clone(),
        phi,
        inside,
        in_omega_h,
        cut_edges,
        stab_nodes,
        exterior,
    })
}

/// Mesh-size hypothesis of the convergence theory: `h < 2 r / sqrt(10)` for
/// an `r`-smooth domain. Logs a warning and returns `false` when violated;
/// the scheme still runs.
pub fn mesh_size_guard(grid: &CartesianGrid, r: f64) -> bool {
    let ok = mesh_size_ok(grid.spacing(), r);
    if !ok {
        log::warn!(
            "mesh size h = {} is not below 2r/sqrt(10) = {} for r = {r}",
            grid.spacing(),
            mesh_size_threshold(r)
        );
    }
    ok
}

pub fn mesh_size_threshold(r: f64) -> f64 {
    2.0 * r / 10f64.sqrt()
}

pub fn mesh_size_ok(h: f64, r: f64) -> bool {
    h < mesh_size_threshold(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin_case;

    fn strip() -> (CartesianGrid, LevelSet) {
        let g = CartesianGrid::unit(2, 10).unwrap();
        let ls = LevelSet::new(2, |p| (p[0] - 0.5).abs() - 0.25);
        (g, ls)
    }

    #[test]
    fn strip_sets_by_construction() {
        let (g, ls) = strip();
        let c = classify_relaxed(&g, &ls).unwrap();
        assert_eq!(c.inside_count(), 55);
        for k in 0..g.node_count() {
            assert_eq!(c.inside[k], (3..=7).contains(&g.multi(k)[0]));
        }
        assert_eq!(c.cut_edges[0].len(), 22);
        assert!(c.cut_edges[0].iter().all(|&k| matches!(g.multi(k)[0], 2 | 7)));
        assert!(c.cut_edges[1].is_empty());
        assert_eq!(c.stab_nodes[0].len(), 22);
        assert!(c.stab_nodes[0].iter().all(|&k| matches!(g.multi(k)[0], 3 | 7)));
        assert!(c.stab_nodes[1].is_empty());
    }

    #[test]
    fn strip_reaching_box_boundary_is_rejected() {
        let (g, ls) = strip();
        assert!(matches!(classify_nodes(&g, &ls), Err(Error::NotEmbedded { .. })));
    }

    #[test]
    fn empty_domain_is_rejected() {
        let g = CartesianGrid::unit(2, 10).unwrap();
        let ls = LevelSet::new(2, |p| (p[0] - 0.5).abs().max(0.0) + 0.01);
        assert!(matches!(classify_nodes(&g, &ls), Err(Error::EmptyDomain)));
    }

    #[test]
    fn zero_level_node_is_outside() {
        let g = CartesianGrid::unit(2, 10).unwrap();
        // phi vanishes exactly at node (7, 5)
        let ls = LevelSet::new(2, |p| {
            let r2 = (p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2);
            if (p[0] - 0.7).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12 {
                0.0
            } else {
                r2 - 0.04
            }
        });
        let c = classify_nodes(&g, &ls).unwrap();
        let k = g.flat(&[7, 5]);
        assert_eq!(c.phi[k], 0.0);
        assert!(!c.inside[k]);
        assert_eq!(c.category(k), NodeCategory::Cut);
    }

    #[test]
    fn mesh_guard_threshold() {
        assert!(mesh_size_ok(0.1, 0.3));
        assert!(!mesh_size_ok(0.2, 0.3));
        assert!(mesh_size_ok(0.094, 0.15));
        let t = mesh_size_threshold(0.3);
        assert!(!mesh_size_ok(t, 0.3));
        assert!(mesh_size_ok(t * (1.0 - 1e-15), 0.3));
        let g = CartesianGrid::unit(2, 10).unwrap();
        assert!(mesh_size_guard(&g, 0.3));
        assert!(!mesh_size_guard(&g, 0.1));
    }

    #[test]
    fn circle_categories_are_complementary() {
        let case = builtin_case("circle2d", 2).unwrap();
        let g = CartesianGrid::unit(2, 20).unwrap();
        let c = classify_nodes(&g, &case.levelset).unwrap();
        for k in 0..g.node_count() {
            let flags = [c.inside[k], c.in_omega_h[k] && !c.inside[k], c.exterior[k]];
            assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
        }
        for (axis, edges) in c.cut_edges.iter().enumerate() {
            for &k in edges {
                let n = k + g.stride(axis);
                assert!(c.phi[k] * c.phi[k] + c.phi[n] * c.phi[n] > 0.0);
                assert_ne!(c.inside[k], c.inside[n]);
            }
        }
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let case = builtin_case("circle2d", 2).unwrap();
        let g = CartesianGrid::unit(2, 10).unwrap();
        let c = classify_nodes(&g, &case.levelset).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cls.csv");
        c.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 122);
        assert!(text.starts_with("i,j,category,phi\n0,0,exterior,"));
    }
}
