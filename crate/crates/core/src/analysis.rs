//! Discrete norms, relative errors and convergence orders.

use std::io::Write;
use std::path::Path;

use crate::classify::Classification;
use crate::error::{Error, Result};
use crate::geometry::TestCase;

/// Values of the three discrete norms; also used for relative errors and
/// fitted orders.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ErrorTriple {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

impl ErrorTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2, self.linf, self.h1]
    }
}

/// Discrete L2 norm, max norm and H1 semi-norm of `v` over the inside nodes.
///
/// The H1 sum runs over grid edges with both endpoints inside.
pub fn discrete_norms(v: &[f64], cls: &Classification) -> Result<ErrorTriple> {
    let grid = &cls.grid;
    if v.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            found: v.len(),
        });
    }
    let h = grid.spacing();
    let vol = h.powi(grid.dim() as i32);
    let mut sum2 = 0.0;
    let mut linf = 0.0f64;
    let mut grad2 = 0.0;
    let mut any = false;
    for k in (0..v.len()).filter(|&k| cls.inside[k]) {
        any = true;
        sum2 += v[k] * v[k];
        linf = linf.max(v[k].abs());
        for axis in 0..grid.dim() {
            if let Some(nb) = grid.neighbor(k, axis, 1).filter(|&nb| cls.inside[nb]) {
                let d = (v[nb] - v[k]) / h;
                grad2 += d * d;
            }
        }
    }
    if !any {
        return Err(Error::EmptySupport);
    }
    Ok(ErrorTriple {
        l2: (vol * sum2).sqrt(),
        linf,
        h1: (vol * grad2).sqrt(),
    })
}

/// Relative errors of `u_h` against the exact solution of `case`, each norm
/// of the difference divided by the same norm of the exact field.
pub fn relative_errors(u_h: &[f64], case: &TestCase, cls: &Classification) -> Result<ErrorTriple> {
    let grid = &cls.grid;
    let dim = grid.dim();
    let exact: Vec<f64> = (0..grid.node_count())
        .map(|k| {
            if cls.inside[k] {
                let p = grid.point(k);
                case.exact(&p[..dim])
            } else {
                0.0
            }
        })
        .collect();
    relative_errors_to(u_h, &exact, cls)
}

/// Relative errors of `u_h` against a reference node field.
pub fn relative_errors_to(u_h: &[f64], reference: &[f64], cls: &Classification) -> Result<ErrorTriple> {
    if u_h.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: u_h.len(),
        });
    }
    let diff: Vec<f64> = u_h.iter().zip(reference).map(|(a, b)| b - a).collect();
    let e = discrete_norms(&diff, cls)?;
    let r = discrete_norms(reference, cls)?;
    if r.l2 == 0.0 || r.linf == 0.0 || r.h1 == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(ErrorTriple {
        l2: e.l2 / r.l2,
        linf: e.linf / r.linf,
        h1: e.h1 / r.h1,
    })
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidData(format!(
            "order fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(h, e)) = points.iter().find(|&&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::InvalidData(format!("order fit needs positive values, got ({h}, {e})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidData("order fit needs at least two distinct h".into()));
    }
    Ok(sxy / sxx)
}

/// Order between consecutive points.
pub fn pairwise_orders(points: &[(f64, f64)]) -> Result<Vec<f64>> {
    points.windows(2).map(fit_order).collect()
}

/// Plotted mesh size used in the published figures.
pub fn plotted_h(hx: f64) -> f64 {
    std::f64::consts::SQRT_2 * hx
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub hx: f64,
    pub h_plot: f64,
    pub errors: ErrorTriple,
    pub kappa: Option<f64>,
    pub iterations: usize,
    pub t_assemble: f64,
    pub t_solve: f64,
}

pub const CSV_HEADER: &str = "N,hx,h_plot,err_l2,err_linf,err_h1,kappa,iters,t_assemble,t_solve";

impl ConvergenceRow {
    pub fn csv_line(&self) -> String {
        let kappa = self.kappa.map(|k| format!("{k:e}")).unwrap_or_default();
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{},{},{:.6},{:.6}",
            self.n,
            self.hx,
            self.h_plot,
            self.errors.l2,
            self.errors.linf,
            self.errors.h1,
            kappa,
            self.iterations,
            self.t_assemble,
            self.t_solve
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ConvergenceTable {
    rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts keeping rows sorted by `N`.
    pub fn push(&mut self, row: ConvergenceRow) {
        let at = self.rows.partition_point(|r| r.n < row.n);
        self.rows.insert(at, row);
    }

    pub fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn series(&self, pick: impl Fn(&ErrorTriple) -> f64) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.h_plot, pick(&r.errors))).collect()
    }

    /// Global least-squares orders per norm.
    pub fn orders(&self) -> Result<ErrorTriple> {
        Ok(ErrorTriple {
            l2: fit_order(&self.series(|e| e.l2))?,
            linf: fit_order(&self.series(|e| e.linf))?,
            h1: fit_order(&self.series(|e| e.h1))?,
        })
    }

    /// Orders between consecutive rows.
    pub fn pairwise(&self) -> Result<Vec<ErrorTriple>> {
        let l2 = pairwise_orders(&self.series(|e| e.l2))?;
        let linf = pairwise_orders(&self.series(|e| e.linf))?;
        let h1 = pairwise_orders(&self.series(|e| e.h1))?;
        Ok((0..l2.len())
            .map(|i| ErrorTriple {
                l2: l2[i],
                linf: linf[i],
                h1: h1[i],
            })
            .collect())
    }

    /// Slope of `log kappa` against `log h_plot` over rows that carry a
    /// condition estimate.
    pub fn kappa_slope(&self) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self.rows.iter().filter_map(|r| r.kappa.map(|k| (r.h_plot, k))).collect();
        fit_order(&pts)
    }

    /// Writes `# key: value` metadata lines, the header and one line per row.
    pub fn write_csv(&self, path: &Path, metadata: &[(String, String)]) -> Result<()> {
        let mut text = String::new();
        for (k, v) in metadata {
            text.push_str(&format!("# {k}: {v}\n"));
        }
        text.push_str(CSV_HEADER);
        text.push('\n');
        for r in &self.rows {
            text.push_str(&r.csv_line());
            text.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_relaxed;
    use crate::geometry::{builtin_case, CartesianGrid, LevelSet};

    fn square_patch() -> Classification {
        // 5x5 inside block at indices 3..=7 of an N=10 grid
        let g = CartesianGrid::unit(2, 10).unwrap();
        let ls = LevelSet::new(2, |p| (p[0] - 0.5).abs().max((p[1] - 0.5).abs()) - 0.25);
        classify_relaxed(&g, &ls).unwrap()
    }

    #[test]
    fn constant_field_norms() {
        let c = square_patch();
        assert_eq!(c.inside_count(), 25);
        let v = vec![1.0; c.grid.node_count()];
        let n = discrete_norms(&v, &c).unwrap();
        assert!((n.l2 - 0.5).abs() < 1e-14);
        assert_eq!(n.linf, 1.0);
        assert_eq!(n.h1, 0.0);
    }

    #[test]
    fn h1_matches_edge_enumeration() {
        let g = CartesianGrid::unit(2, 10).unwrap();
        let ls = LevelSet::new(2, |p| (p[0] - 0.5).abs() - 0.25);
        let c = classify_relaxed(&g, &ls).unwrap();
        let v = g.sample(|p| p[0]);
        let h = g.spacing();
        let mut sum = 0.0;
        for i in 0..=10 {
            for j in 0..=10 {
                let a = g.flat(&[i, j]);
                for b in [(i + 1 <= 10).then(|| g.flat(&[i + 1, j])), (j + 1 <= 10).then(|| g.flat(&[i, j + 1]))]
                    .into_iter()
                    .flatten()
                {
                    if c.inside[a] && c.inside[b] {
                        sum += h * h * ((v[b] - v[a]) / h).powi(2);
                    }
                }
            }
        }
        let n = discrete_norms(&v, &c).unwrap();
        assert!((n.h1 - sum.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn relative_error_examples() {
        let case = builtin_case("circle2d", 2).unwrap();
        let g = CartesianGrid::unit(2, 20).unwrap();
        let c = crate::classify::classify_nodes(&g, &case.levelset).unwrap();
        let u: Vec<f64> = g.sample(|p| case.exact(p));
        let e = relative_errors(&u, &case, &c).unwrap();
        assert_eq!(e.as_array(), [0.0; 3]);
        let u2: Vec<f64> = u.iter().map(|x| 1.01 * x).collect();
        let e = relative_errors(&u2, &case, &c).unwrap();
        for x in e.as_array() {
            assert!((x - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_reference_and_empty_support() {
        let c = square_patch();
        let z = vec![0.0; c.grid.node_count()];
        assert!(matches!(relative_errors_to(&z, &z, &c), Err(Error::ZeroReference)));
        let mut none = c.clone();
        none.inside.iter_mut().for_each(|b| *b = false);
        assert!(matches!(discrete_norms(&z, &none), Err(Error::EmptySupport)));
    }

    #[test]
    fn fit_order_examples() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let sq: Vec<_> = hs.iter().map(|&h| (h, 3.0 * h * h)).collect();
        assert!((fit_order(&sq).unwrap() - 2.0).abs() < 1e-12);
        let p: Vec<_> = hs.iter().map(|&h| (h, 0.7 * h.powf(1.5))).collect();
        assert!((fit_order(&p).unwrap() - 1.5).abs() < 1e-12);
        assert!(fit_order(&[(0.1, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.05, 0.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.1, 0.5)]).is_err());
    }

    #[test]
    fn fit_order_on_published_series() {
        let errs = [
            0.015330827686081596,
            0.0033789089800612144,
            0.0008620940986203928,
            0.00020507051643194895,
            5.0490510612585105e-05,
            1.245055344631594e-05,
        ];
        let pts: Vec<_> = [10usize, 20, 40, 80, 160, 320]
            .iter()
            .zip(errs)
            .map(|(&n, e)| (plotted_h(1.0 / n as f64), e))
            .collect();
        assert!((fit_order(&pts).unwrap() - 2.05).abs() < 0.02);
        assert_eq!(pairwise_orders(&pts).unwrap().len(), 5);
    }

    #[test]
    fn table_sorted_and_csv() {
        let mut t = ConvergenceTable::new();
        for n in [40usize, 10, 20] {
            let hx = 1.0 / n as f64;
            t.push(ConvergenceRow {
                n,
                hx,
                h_plot: plotted_h(hx),
                errors: ErrorTriple { l2: hx * hx, linf: hx * hx, h1: hx },
                kappa: Some(1.0 / (hx * hx)),
                iterations: 0,
                t_assemble: 0.0,
                t_solve: 0.0,
            });
        }
        let ns: Vec<_> = t.rows().iter().map(|r| r.n).collect();
        assert_eq!(ns, [10, 20, 40]);
        let o = t.orders().unwrap();
        assert!((o.l2 - 2.0).abs() < 1e-12 && (o.h1 - 1.0).abs() < 1e-12);
        assert!((t.kappa_slope().unwrap() + 2.0).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.write_csv(&path, &[("scheme".into(), "phifd".into())]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# scheme: phifd");
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("10,"));
    }
}
