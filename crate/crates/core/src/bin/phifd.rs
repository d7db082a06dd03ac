use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phifd::experiments::{
    export_field, run_conditioning, run_convergence, run_multigrid, run_sweep, solve_at, MultigridConfig, RunConfig,
    SolverKind,
};
use phifd::{Error, Result, Scheme};

#[derive(Parser)]
#[command(name = "phifd", version, about = "Penalized finite differences on level-set domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and report the relative errors.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write the solution as a VTK file (plus a CSV next to it).
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Errors and fitted orders over a list of resolutions.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Errors and condition numbers over a list of gamma or sigma values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        gamma_list: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sigma_list: Option<Vec<f64>>,
    },
    /// Condition numbers and their slope against the mesh size.
    Conditioning {
        #[command(flatten)]
        common: Common,
    },
    /// Coarse direct solve, spline transfer and fine BiCGSTAB.
    Multigrid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n0: Option<Vec<usize>>,
        #[arg(long)]
        nobj: Option<usize>,
        /// Also run BiCGSTAB from a zero initial guess.
        #[arg(long)]
        cold_baseline: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxiter: Option<usize>,
    /// Also estimate condition numbers.
    #[arg(long)]
    kappa: bool,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(case) = self.case {
            if self.dim.is_none() && case == "sphere3d" {
                cfg.dim = 3;
            }
            cfg.case = case;
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.n {
            cfg.n = Some(v);
            cfg.n_list = None;
        }
        if let Some(v) = self.n_list {
            cfg.n_list = Some(v);
        }
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.solver {
            cfg.solver = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.maxiter {
            cfg.maxiter = v;
        }
        cfg.condition |= self.kappa;
        if self.out.is_some() {
            cfg.out = self.out;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common, field } => {
            let mut cfg = common.resolve()?;
            let n = match (cfg.n, &cfg.n_list) {
                (Some(n), _) => n,
                (None, Some(l)) if l.len() == 1 => l[0],
                _ => return Err(Error::Config("solve needs a single --n".into())),
            };
            cfg.n = Some(n);
            cfg.n_list = None;
            let table = run_convergence(&cfg)?;
            let r = &table.rows()[0];
            println!(
                "{} {} N={} L2={:e} Linf={:e} H1={:e}{} iters={} t_assemble={:.3}s t_solve={:.3}s",
                cfg.case,
                cfg.scheme,
                r.n,
                r.errors.l2,
                r.errors.linf,
                r.errors.h1,
                r.kappa.map(|k| format!(" kappa={k:.1}")).unwrap_or_default(),
                r.iterations,
                r.t_assemble,
                r.t_solve
            );
            if let Some(path) = field {
                let case = cfg.test_case()?;
                let solved = solve_at(&cfg, &case, &cfg.params()?, n)?;
                let csv = export_field(&solved.report.solution, solved.system.grid(), &path)?;
                println!("field written to {} and {}", path.display(), csv.display());
            }
        }
        Command::Convergence { common } => {
            let cfg = common.resolve()?;
            let table = run_convergence(&cfg)?;
            for r in table.rows() {
                println!("{}", r.csv_line());
            }
            if table.len() >= 2 {
                let o = table.orders()?;
                println!("orders: L2 {:.3} Linf {:.3} H1 {:.3}", o.l2, o.linf, o.h1);
            }
        }
        Command::Sweep {
            common,
            gamma_list,
            sigma_list,
        } => {
            let mut cfg = common.resolve()?;
            if gamma_list.is_some() {
                cfg.gamma_list = gamma_list;
            }
            if sigma_list.is_some() {
                cfg.sigma_list = sigma_list;
            }
            for r in run_sweep(&cfg)? {
                println!("{}={} {}", r.param.name(), r.value, r.row.csv_line());
            }
        }
        Command::Conditioning { common } => {
            let cfg = common.resolve()?;
            let (table, slope) = run_conditioning(&cfg)?;
            for r in table.rows() {
                println!("N={} h_plot={:.5} kappa={:.1}", r.n, r.h_plot, r.kappa.unwrap_or(f64::NAN));
            }
            println!("slope: {slope:.3}");
        }
        Command::Multigrid {
            common,
            n0,
            nobj,
            cold_baseline,
        } => {
            let mut cfg = common.resolve()?;
            let mut mg = cfg.multigrid.take().unwrap_or(MultigridConfig {
                n0: Vec::new(),
                n_obj: 0,
                cold_baseline: false,
            });
            if let Some(v) = n0 {
                mg.n0 = v;
            }
            if let Some(v) = nobj {
                mg.n_obj = v;
            }
            mg.cold_baseline |= cold_baseline;
            cfg.multigrid = Some(mg);
            for r in run_multigrid(&cfg)? {
                println!("{}", r.csv_line());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
