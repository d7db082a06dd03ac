use crate::classify::Classification;
use crate::error::Result;
use crate::geometry::TestCase;
use crate::sparse::{CsrMatrix, TripletBuilder};

use super::{inside_source, SchemeParams, SparseSystem};

/// The four additive pieces of the phifd matrix.
#[derive(Debug, Clone)]
pub struct PhiFdBlocks {
    /// Negative discrete Laplacian on inside rows.
    pub laplacian: CsrMatrix,
    /// Cut-edge penalty, scaled by `gamma / h^2`.
    pub penalty: CsrMatrix,
    /// Second-difference ghost penalty, scaled by `sigma / h^2`.
    pub stabilization: CsrMatrix,
    /// Identity on exterior nodes.
    pub padding: CsrMatrix,
}

impl PhiFdBlocks {
    pub fn total(&self) -> Result<CsrMatrix> {
        self.laplacian
            .add(&self.penalty)?
            .add(&self.stabilization)?
            .add(&self.padding)
    }
}

pub fn phifd_blocks(cls: &Classification, params: &SchemeParams) -> PhiFdBlocks {
    let n = cls.grid.node_count();
    let mut lap = TripletBuilder::new(n);
    let mut pen = TripletBuilder::new(n);
    let mut stab = TripletBuilder::new(n);
    let mut pad = TripletBuilder::new(n);
    push_laplacian(cls, &mut lap);
    push_penalty(cls, params.gamma, &mut pen);
    push_stabilization(cls, params.sigma, &mut stab);
    push_padding(cls, &mut pad);
    PhiFdBlocks {
        laplacian: lap.build(),
        penalty: pen.build(),
        stabilization: stab.build(),
        padding: pad.build(),
    }
}

pub fn assemble_phifd(cls: Classification, case: &TestCase, params: &SchemeParams) -> Result<SparseSystem> {
    let n = cls.grid.node_count();
    let dim = cls.grid.dim();
    let inside = cls.inside_count();
    let mut t = TripletBuilder::with_capacity(n, (2 * dim + 1) * inside + 4 * cls.cut_edge_count() + 9 * inside);
    push_laplacian(&cls, &mut t);
    push_penalty(&cls, params.gamma, &mut t);
    push_stabilization(&cls, params.sigma, &mut t);
    push_padding(&cls, &mut t);
    let rhs = inside_source(&cls, case);
    let padded = cls.exterior.clone();
    Ok(SparseSystem {
        matrix: t.build(),
        rhs,
        classification: cls,
        params: *params,
        padded,
    })
}

fn push_laplacian(cls: &Classification, t: &mut TripletBuilder) {
    let grid = &cls.grid;
    let dim = grid.dim();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    for k in (0..grid.node_count()).filter(|&k| cls.inside[k]) {
        t.push(k, k, 2.0 * dim as f64 * inv_h2);
        for axis in 0..dim {
            for o in [-1, 1] {
                if let Some(nb) = grid.neighbor(k, axis, o) {
                    t.push(k, nb, -inv_h2);
                }
            }
        }
    }
}

fn push_penalty(cls: &Classification, gamma: f64, t: &mut TripletBuilder) {
    let grid = &cls.grid;
    let w = gamma / (grid.spacing() * grid.spacing());
    for (axis, edges) in cls.cut_edges.iter().enumerate() {
        let s = grid.stride(axis);
        for &a in edges {
            let b = a + s;
            let (pa, pb) = (cls.phi[a], cls.phi[b]);
            let sum = pa * pa + pb * pb;
            let cross = -w * pa * pb / sum;
            t.push(a, a, w * pb * pb / sum);
            t.push(a, b, cross);
            t.push(b, a, cross);
            t.push(b, b, w * pa * pa / sum);
        }
    }
}

fn push_stabilization(cls: &Classification, sigma: f64, t: &mut TripletBuilder) {
    const STENCIL: [f64; 3] = [1.0, -2.0, 1.0];
    let grid = &cls.grid;
    let w = sigma / (grid.spacing() * grid.spacing());
    let mut nodes = Vec::with_capacity(3);
    let mut coef = Vec::with_capacity(3);
    for (axis, js) in cls.stab_nodes.iter().enumerate() {
        for &j in js {
            nodes.clear();
            coef.clear();
            for (o, c) in [-1isize, 0, 1].into_iter().zip(STENCIL) {
                if let Some(nb) = grid.neighbor(j, axis, o) {
                    nodes.push(nb);
                    coef.push(c);
                }
            }
            for (a, &ra) in nodes.iter().enumerate() {
                for (b, &cb) in nodes.iter().enumerate() {
                    t.push(ra, cb, w * coef[a] * coef[b]);
                }
            }
        }
    }
}

fn push_padding(cls: &Classification, t: &mut TripletBuilder) {
    for (k, &e) in cls.exterior.iter().enumerate() {
        if e {
            t.push(k, k, 1.0);
        }
    }
}
