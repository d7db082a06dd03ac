//! Compressed sparse row storage, triplet accumulation and MatrixMarket I/O.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed row form. Columns are sorted and
/// unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw arrays, validating the layout.
    pub fn new(
        dim: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != dim + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidData("row offsets must have dim + 1 entries starting at 0".into()));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidData("row offsets must be monotone".into()));
        }
        let nnz = row_offsets[dim];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidData("column/value arrays do not match row offsets".into()));
        }
        for i in 0..dim {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= dim) {
                return Err(Error::InvalidData(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(CsrMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(dim: usize) -> Self {
        CsrMatrix::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        CsrMatrix {
            dim,
            row_offsets: (0..=dim).collect(),
            col_indices: (0..dim).collect(),
            values: diag.to_vec(),
        }
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut t = TripletBuilder::new(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        Ok(t.build())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dim];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for len in [x.len(), y.len()] {
            if len != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: len,
                });
            }
        }
        y.par_iter_mut().with_min_len(4096).enumerate().for_each(|(i, yi)| {
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            *yi = self.col_indices[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&j, &v)| v * x[j])
                .sum();
        });
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.dim + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let p = next[j];
                col_indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            dim: self.dim,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= c);
        m
    }

    /// Entrywise sum; sparsity patterns are merged.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut t = TripletBuilder::new(self.dim);
        for m in [self, other] {
            for i in 0..m.dim {
                for (j, v) in m.row(i) {
                    t.push(i, j, v);
                }
            }
        }
        Ok(t.build())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            for (j, v) in t.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz())?;
            for i in 0..self.dim {
                for (j, v) in self.row(i) {
                    writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                }
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Reads a square real `coordinate general` MatrixMarket file.
    pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidData("empty MatrixMarket file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let h = header.to_ascii_lowercase();
        if !h.starts_with("%%matrixmarket matrix coordinate real general") {
            return Err(Error::InvalidData(format!("unsupported MatrixMarket header '{header}'")));
        }
        let bad = |what: &str| Error::InvalidData(format!("malformed MatrixMarket {what}"));
        let mut builder: Option<TripletBuilder> = None;
        let mut expected = 0usize;
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match builder.as_mut() {
                None => {
                    let [r, c, nnz] = fields[..] else {
                        return Err(bad("size line"));
                    };
                    let r: usize = r.parse().map_err(|_| bad("size line"))?;
                    let c: usize = c.parse().map_err(|_| bad("size line"))?;
                    if r != c {
                        return Err(Error::InvalidData("matrix must be square".into()));
                    }
                    expected = nnz.parse().map_err(|_| bad("size line"))?;
                    builder = Some(TripletBuilder::new(r));
                }
                Some(t) => {
                    let [i, j, v] = fields[..] else {
                        return Err(bad("entry"));
                    };
                    let i: usize = i.parse().map_err(|_| bad("entry"))?;
                    let j: usize = j.parse().map_err(|_| bad("entry"))?;
                    let v: f64 = v.parse().map_err(|_| bad("entry"))?;
                    if i == 0 || j == 0 || i > t.dim || j > t.dim {
                        return Err(bad("index"));
                    }
                    t.push(i - 1, j - 1, v);
                }
            }
        }
        let t = builder.ok_or_else(|| bad("size line"))?;
        if t.len() != expected {
            return Err(Error::InvalidData(format!(
                "expected {expected} entries, found {}",
                t.len()
            )));
        }
        Ok(t.build())
    }
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order when the matrix is built, so the result only depends on
/// the order of `push` calls.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    dim: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        TripletBuilder {
            dim,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        TripletBuilder {
            dim,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(value);
    }

    pub fn build(self) -> CsrMatrix {
        let dim = self.dim;
        // counting sort by row keeps insertion order within each row
        let mut offsets = vec![0usize; dim + 1];
        for &r in &self.rows {
            offsets[r + 1] += 1;
        }
        for i in 0..dim {
            offsets[i + 1] += offsets[i];
        }
        let mut next = offsets.clone();
        let mut order = vec![0usize; self.rows.len()];
        for (t, &r) in self.rows.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut col_indices = Vec::with_capacity(self.rows.len());
        let mut values = Vec::with_capacity(self.rows.len());
        row_offsets.push(0);
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for i in 0..dim {
            scratch.clear();
            scratch.extend(order[offsets[i]..offsets[i + 1]].iter().map(|&t| (self.cols[t], t)));
            // stable: equal columns keep insertion order
            scratch.sort_by_key(|&(c, _)| c);
            let mut p = 0;
            while p < scratch.len() {
                let c = scratch[p].0;
                let mut v = 0.0;
                while p < scratch.len() && scratch[p].0 == c {
                    v += self.vals[scratch[p].1];
                    p += 1;
                }
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
