//! Experiment driver: configuration, convergence studies, parameter sweeps,
//! conditioning curves, multigrid runs and field export.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;

use crate::analysis::{plotted_h, relative_errors, ConvergenceRow, ConvergenceTable, CSV_HEADER};
use crate::assembly::{assemble, Scheme, SchemeParams, SparseSystem};
use crate::error::{Error, Result};
use crate::geometry::{builtin_case, CartesianGrid, TestCase};
use crate::multigrid::{multigrid_solve, MultigridPlan, MultigridReport};
use crate::solvers::{bicgstab, condition_estimate, BicgstabOptions, SolveReport, CONDITION_MAXITER, CONDITION_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Bicgstab,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(SolverKind::Direct),
            "bicgstab" => Ok(SolverKind::Bicgstab),
            _ => Err(Error::Config(format!("unknown solver '{s}' (expected direct or bicgstab)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultigridConfig {
    /// Coarse resolutions, one run each.
    pub n0: Vec<usize>,
    pub n_obj: usize,
    #[serde(default)]
    pub cold_baseline: bool,
}

/// Run settings, read from TOML and overridable field by field.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub case: String,
    pub scheme: Scheme,
    pub dim: usize,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    /// Defaults to 1 for phifd and 10 for phifd2.
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub gamma_list: Option<Vec<f64>>,
    pub sigma_list: Option<Vec<f64>>,
    pub solver: SolverKind,
    pub tol: f64,
    pub maxiter: usize,
    /// Also estimate the condition number of each system.
    pub condition: bool,
    pub multigrid: Option<MultigridConfig>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "circle2d".into(),
            scheme: Scheme::Phifd,
            dim: 2,
            n: None,
            n_list: None,
            gamma: None,
            sigma: crate::assembly::DEFAULT_SIGMA,
            gamma_list: None,
            sigma_list: None,
            solver: SolverKind::Direct,
            tol: 1e-4,
            maxiter: 100_000,
            condition: false,
            multigrid: None,
            out: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn params(&self) -> Result<SchemeParams> {
        let gamma = self.gamma.unwrap_or_else(|| SchemeParams::default_gamma(self.scheme));
        SchemeParams::new(self.scheme, gamma, self.sigma)
    }

    pub fn test_case(&self) -> Result<TestCase> {
        builtin_case(&self.case, self.dim)
    }

    /// Resolutions of a study: the list if given, else the single `n`.
    pub fn resolutions(&self) -> Result<Vec<usize>> {
        let mut ns = match (&self.n_list, self.n) {
            (Some(list), _) if !list.is_empty() => list.clone(),
            (_, Some(n)) => vec![n],
            _ => return Err(Error::Config("no resolution given (set n or n_list)".into())),
        };
        ns.sort_unstable();
        ns.dedup();
        if ns[0] < 2 {
            return Err(Error::Config(format!("resolution must be at least 2, got {}", ns[0])));
        }
        Ok(ns)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.test_case()?;
        if !(self.tol > 0.0) || self.maxiter == 0 {
            return Err(Error::Config("tol and maxiter must be positive".into()));
        }
        Ok(())
    }

    /// `# key: value` lines written at the top of every CSV.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let params = self.params().ok();
        let mut m = vec![
            ("phifd_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("case".into(), self.case.clone()),
            ("dim".into(), self.dim.to_string()),
            ("scheme".into(), self.scheme.to_string()),
        ];
        if let Some(p) = params {
            m.push(("gamma".into(), p.gamma.to_string()));
            m.push(("sigma".into(), p.sigma.to_string()));
        }
        m.push(("solver".into(), format!("{:?}", self.solver).to_lowercase()));
        m.push(("tol".into(), self.tol.to_string()));
        m.push(("seed".into(), self.seed.to_string()));
        m.push(("h_plot".into(), "sqrt(2) * hx".into()));
        m
    }
}

/// One assembled and solved system.
pub struct Solved {
    pub system: SparseSystem,
    pub report: SolveReport,
    pub row: ConvergenceRow,
}

/// Assembles and solves at resolution `n`, measuring errors and, when asked,
/// the condition number.
pub fn solve_at(cfg: &RunConfig, case: &TestCase, params: &SchemeParams, n: usize) -> Result<Solved> {
    let grid = CartesianGrid::unit(cfg.dim, n)?;
    let start = Instant::now();
    let system = assemble(&grid, case, params)?;
    let t_assemble = start.elapsed().as_secs_f64();
    let report = match cfg.solver {
        SolverKind::Direct => system.solve_direct()?,
        SolverKind::Bicgstab => {
            let x0 = vec![0.0; system.dim()];
            let opts = BicgstabOptions {
                tol: cfg.tol,
                maxiter: cfg.maxiter,
            };
            let r = bicgstab(&system.matrix, &system.rhs, &x0, opts)?;
            if !r.converged {
                return Err(Error::NotConverged { iterations: r.iterations });
            }
            r
        }
    };
    let errors = relative_errors(&report.solution, case, &system.classification)?;
    let kappa = if cfg.condition {
        Some(condition_estimate(&system.matrix, CONDITION_TOL, CONDITION_MAXITER)?.kappa)
    } else {
        None
    };
    let hx = grid.spacing();
    let row = ConvergenceRow {
        n,
        hx,
        h_plot: plotted_h(hx),
        errors,
        kappa,
        iterations: report.iterations,
        t_assemble,
        t_solve: report.wall_time,
    };
    Ok(Solved { system, report, row })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_parent(path)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn metadata_block(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

/// Solves at every resolution and fits orders. On failure the rows done so
/// far are still written before the error is returned.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let case = cfg.test_case()?;
    let params = cfg.params()?;
    let mut table = ConvergenceTable::new();
    let mut failure = None;
    for n in cfg.resolutions()? {
        match solve_at(cfg, &case, &params, n) {
            Ok(s) => {
                log::info!("N = {n}: L2 = {:.4e}", s.row.errors.l2);
                table.push(s.row);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(path) = &cfg.out {
        let mut meta = cfg.metadata();
        if table.len() >= 2 {
            let o = table.orders()?;
            meta.push(("orders".into(), format!("l2 {:.4} linf {:.4} h1 {:.4}", o.l2, o.linf, o.h1)));
        }
        write_parent(path)?;
        table.write_csv(path, &meta)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

fn write_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

/// Which weight a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    Sigma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub row: ConvergenceRow,
}

/// Resolutions used by sweeps when none are configured.
pub const SWEEP_RESOLUTIONS: [usize; 4] = [10, 20, 40, 80];

/// Varies `gamma` or `sigma` over its list at each resolution, recording the
/// error and condition number.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let (param, values) = match (&cfg.gamma_list, &cfg.sigma_list) {
        (Some(_), Some(_)) => return Err(Error::Config("give either gamma_list or sigma_list, not both".into())),
        (Some(g), None) => (SweepParam::Gamma, g.clone()),
        (None, Some(s)) => (SweepParam::Sigma, s.clone()),
        (None, None) => return Err(Error::Config("a sweep needs gamma_list or sigma_list".into())),
    };
    if values.is_empty() {
        return Err(Error::Config("sweep list is empty".into()));
    }
    cfg.validate()?;
    let case = cfg.test_case()?;
    let ns = if cfg.n_list.is_some() || cfg.n.is_some() {
        cfg.resolutions()?
    } else {
        SWEEP_RESOLUTIONS.to_vec()
    };
    let mut run = cfg.clone();
    run.condition = true;
    let mut rows = Vec::new();
    for &v in &values {
        let mut params = cfg.params()?;
        match param {
            SweepParam::Gamma => params.gamma = v,
            SweepParam::Sigma => params.sigma = v,
        }
        params.validate()?;
        for &n in &ns {
            let s = solve_at(&run, &case, &params, n)?;
            rows.push(SweepRow { param, value: v, row: s.row });
        }
    }
    if let Some(path) = &cfg.out {
        let mut text = metadata_block(&cfg.metadata());
        text.push_str("param,value,");
        text.push_str(CSV_HEADER);
        text.push('\n');
        for r in &rows {
            let _ = writeln!(text, "{},{},{}", r.param.name(), r.value, r.row.csv_line());
        }
        write_text(path, &text)?;
    }
    Ok(rows)
}

/// Condition numbers per resolution with the fitted slope of `log kappa`
/// against `log h_plot`.
pub fn run_conditioning(cfg: &RunConfig) -> Result<(ConvergenceTable, f64)> {
    let mut run = cfg.clone();
    run.condition = true;
    run.out = None;
    let table = run_convergence(&run)?;
    let slope = table.kappa_slope()?;
    if let Some(path) = &cfg.out {
        let mut meta = cfg.metadata();
        meta.push(("kappa_slope".into(), format!("{slope:.4}")));
        write_parent(path)?;
        table.write_csv(path, &meta)?;
    }
    Ok((table, slope))
}

/// One cascade per coarse resolution in the multigrid settings.
pub fn run_multigrid(cfg: &RunConfig) -> Result<Vec<MultigridReport>> {
    cfg.validate()?;
    let mg = cfg
        .multigrid
        .as_ref()
        .ok_or_else(|| Error::Config("multigrid settings missing (n0, n_obj)".into()))?;
    if mg.n0.is_empty() {
        return Err(Error::Config("multigrid needs at least one coarse resolution".into()));
    }
    let case = cfg.test_case()?;
    let params = cfg.params()?;
    let mut reports = Vec::new();
    for &n0 in &mg.n0 {
        let mut plan = MultigridPlan::new(n0, mg.n_obj, params)?;
        plan.tol = cfg.tol;
        plan.maxiter = cfg.maxiter;
        plan.cold_baseline = mg.cold_baseline;
        let r = multigrid_solve(&case, &plan)?;
        log::info!("N0 = {n0}: L2 = {:.4e}, {} iterations", r.errors.l2, r.iterations);
        reports.push(r);
    }
    if let Some(path) = &cfg.out {
        let mut text = metadata_block(&cfg.metadata());
        text.push_str(MultigridReport::CSV_HEADER);
        text.push('\n');
        for r in &reports {
            text.push_str(&r.csv_line());
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    Ok(reports)
}

/// Writes `u` as a legacy VTK structured-points file at `path` and as a CSV
/// (`i,j[,k],x,y[,z],u`) next to it with the extension `csv`. Values are
/// printed in shortest round-trip form.
pub fn export_field(u: &[f64], grid: &CartesianGrid, path: &Path) -> Result<PathBuf> {
    if u.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            found: u.len(),
        });
    }
    let dim = grid.dim();
    let m = grid.nodes_per_axis();
    let h = grid.spacing();
    let lower = grid.lower();
    let dims = if dim == 2 { [m, m, 1] } else { [m, m, m] };
    let origin = if dim == 2 { [lower[0], lower[1], 0.0] } else { [lower[0], lower[1], lower[2]] };

    let mut vtk = String::with_capacity(u.len() * 24 + 256);
    vtk.push_str("# vtk DataFile Version 3.0\nphifd node field\nASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(vtk, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(vtk, "ORIGIN {} {} {}", origin[0], origin[1], origin[2]);
    let _ = writeln!(vtk, "SPACING {h} {h} {h}");
    let _ = writeln!(vtk, "POINT_DATA {}", u.len());
    vtk.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for v in u {
        let _ = writeln!(vtk, "{v}");
    }
    write_text(path, &vtk)?;

    let csv_path = path.with_extension("csv");
    let mut csv = String::with_capacity(u.len() * 48);
    csv.push_str(if dim == 2 { "i,j,x,y,u\n" } else { "i,j,k,x,y,z,u\n" });
    for (k, v) in u.iter().enumerate() {
        let idx = grid.multi(k);
        let p = grid.point(k);
        for i in &idx[..dim] {
            let _ = write!(csv, "{i},");
        }
        for x in &p[..dim] {
            let _ = write!(csv, "{x},");
        }
        let _ = writeln!(csv, "{v}");
    }
    write_text(&csv_path, &csv)?;
    Ok(csv_path)
}

/// Reads the `u` column of a CSV written by [`export_field`].
pub fn read_field_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidData("empty field file".into()))?;
    if header.rsplit(',').next() != Some("u") {
        return Err(Error::InvalidData(format!("unexpected field header '{header}'")));
    }
    lines
        .map(|l| {
            let last = l.rsplit(',').next().unwrap_or("");
            last.parse::<f64>()
                .map_err(|e| Error::InvalidData(format!("bad value '{last}': {e}")))
        })
        .collect()
}
