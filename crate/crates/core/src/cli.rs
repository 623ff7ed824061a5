//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver error, 3 IO error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::analysis::assemble_a0;
use crate::config::{parse_config, ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    compatibility_residual, enforce_compatibility, fit_equilibrium_convergence, mms_convergence_study,
    reflection_experiment, PulseConfig, ReflectionResult, ReflectionSetup,
};
use crate::grid::Grid;
use crate::io::{self, num, Summary};
use crate::model::PhysicalParams;
use crate::stepper::{BoundaryKind, Problem, Scheme};

pub const OUT_ENV: &str = "WESTERVELT_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "westervelt",
    about = "Westervelt equation with absorbing boundary conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct OutArg {
    /// Output directory (overrides WESTERVELT_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time integration of the configured initial data.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Eigenvalues of the linearization at the equilibrium `r`.
    Spectrum {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        r: f64,
        /// Nodes per axis.
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Pulse reflection at the right wall for each boundary variant.
    Reflection {
        /// Without a config: c = 1, beta = 1e-3, gamma = 0.5, 401 nodes on [0, 1], dt = 2.5e-3.
        #[arg(long)]
        config: Option<PathBuf>,
        /// abc, neumann, dirichlet-v or all.
        #[arg(long, default_value = "all")]
        variant: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Boundary compatibility of the configured initial data.
    CompatCheck {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Manufactured-solution convergence study.
    Mms {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print the version.
    Version,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        e if e.is_solver_error() => 2,
        _ => 1,
    }
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn out_dir(flag: &OutArg, config: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = &flag.out {
        return p.clone();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    PathBuf::from(config.map_or("out", |c| c.output.as_str()))
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn expect_kind(cfg: &RunConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment == kind {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "config describes a `{}` experiment, not `{}`",
            cfg.experiment.name(),
            kind.name()
        )))
    }
}

/// Writes the error record to `summary.txt` and hands the error back.
fn fail(dir: &Path, mut summary: Summary, e: Error) -> Result<i32> {
    summary.push_error(&e);
    io::write_report(&summary, &dir.join("summary.txt"))?;
    eprintln!("error: {e}");
    Ok(exit_code(&e))
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Version => {
            println!("westervelt {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
        Command::Simulate { config, out } => simulate(&load(&config)?, &out),
        Command::Spectrum {
            r,
            n,
            dim,
            c,
            beta,
            gamma,
            out,
        } => spectrum(r, n, dim, c, beta, gamma, &out),
        Command::Reflection { config, variant, out } => {
            let cfg = config.as_deref().map(load).transpose()?;
            if let Some(cfg) = &cfg {
                expect_kind(cfg, ExperimentKind::Reflection)?;
            }
            reflection(cfg.as_ref(), &variant, &out)
        }
        Command::CompatCheck { config, out } => compat_check(&load(&config)?, &out),
        Command::Mms { config, out } => mms(&load(&config)?, &out),
    }
}

fn base_summary(cfg: &RunConfig) -> Summary {
    let mut s = Summary::new();
    s.push("experiment", cfg.experiment.name())
        .push("seed", cfg.seed)
        .push_num("c", cfg.params.c())
        .push_num("beta", cfg.params.beta())
        .push_num("gamma", cfg.params.gamma())
        .push("boundary", cfg.boundary.name())
        .push("dim", cfg.grid.dim)
        .push("nx", cfg.grid.nx);
    if cfg.grid.dim == 2 {
        s.push("ny", cfg.grid.ny);
    }
    s
}

fn simulate(cfg: &RunConfig, out: &OutArg) -> Result<i32> {
    expect_kind(cfg, ExperimentKind::Simulate)?;
    let dir = out_dir(out, Some(cfg));
    let mut summary = base_summary(cfg);
    summary
        .push("scheme", cfg.stepper.scheme.name())
        .push_num("dt", cfg.stepper.dt)
        .push_num("t_end", cfg.t_end)
        .push("recipe", cfg.recipe.id());
    let grid = Arc::new(cfg.grid.build()?);
    let mut data = cfg.recipe.build(&grid, &cfg.params)?;
    if cfg.enforce_compatibility {
        match enforce_compatibility(&data, &cfg.params, &grid) {
            Ok(fix) => {
                summary
                    .push_num("compat_correction_norm", fix.correction_norm)
                    .push_num("compat_residual", fix.residual_after);
                data = fix.data;
            }
            Err(e) => return fail(&dir, summary, e),
        }
    }
    let problem = Problem::new(cfg.params, grid).with_boundary(cfg.boundary);
    let mut report = problem.simulate(&data.state(0.0), cfg.t_end, &cfg.stepper, &mut []);
    if report.is_completed() {
        match fit_equilibrium_convergence(&report, &cfg.params) {
            Ok(fit) => report.fit = Some(fit),
            Err(e) => {
                summary.push("fit", e);
            }
        }
    }
    summary.append(io::report_summary(&report));
    io::write_series(&report.series, report.reference, &dir.join("series.csv"))?;
    io::write_report(&summary, &dir.join("summary.txt"))?;
    match report.error() {
        Some(e) => {
            eprintln!("error: {e}");
            Ok(exit_code(e))
        }
        None => Ok(0),
    }
}

fn spectrum(r: f64, n: usize, dim: usize, c: f64, beta: f64, gamma: f64, out: &OutArg) -> Result<i32> {
    let params = if gamma == 0.0 {
        PhysicalParams::linear(c, beta)?
    } else {
        PhysicalParams::new(c, beta, gamma)?
    };
    let grid = match dim {
        1 => Grid::interval(0.0, 1.0, n)?,
        2 => Grid::rectangle((0.0, 1.0), (0.0, 1.0), n, n)?,
        _ => return Err(Error::Config(format!("--dim must be 1 or 2 (got {dim})"))),
    };
    let dir = out_dir(out, None);
    let mut summary = Summary::new();
    summary
        .push_num("r", r)
        .push("n", n)
        .push("dim", dim)
        .push_num("c", c)
        .push_num("beta", beta)
        .push_num("gamma", gamma);
    let op = match assemble_a0(r, grid, &params) {
        Ok(op) => op,
        Err(e) => return fail(&dir, summary, e),
    };
    let spec = match op.spectrum() {
        Ok(s) => s,
        Err(e) => return fail(&dir, summary, e),
    };
    summary
        .push("status", "completed")
        .push("eigenvalues", spec.eigenvalues.len())
        .push("zero_cluster", spec.zero_cluster())
        .push_num("norm", spec.norm)
        .push_num("gap", spec.gap().unwrap_or(f64::NAN));
    match op.kernel_and_semisimplicity() {
        Ok(k) => {
            summary
                .push("kernel_dim", k.kernel_dim)
                .push("zero_algebraic_multiplicity", k.zero_algebraic_multiplicity)
                .push("semisimple", k.semisimple)
                .push_num("jordan_probe_residual", k.jordan_probe_residual);
        }
        Err(e) => {
            summary.push("kernel", e);
        }
    }
    io::write_spectrum(&spec, &dir.join("spectrum.csv"))?;
    io::write_report(&summary, &dir.join("summary.txt"))?;
    Ok(0)
}

fn reflection(cfg: Option<&RunConfig>, variant: &str, out: &OutArg) -> Result<i32> {
    let variants = match variant {
        "all" => vec![BoundaryKind::Absorbing, BoundaryKind::Neumann, BoundaryKind::DirichletV],
        v => match BoundaryKind::parse(v) {
            Some(b) => vec![b],
            None => {
                return Err(Error::Config(format!(
                    "--variant must be abc, neumann, dirichlet-v or all (got {v:?})"
                )))
            }
        },
    };
    let (setup, pulse) = match cfg {
        Some(c) => (c.reflection_setup(), c.pulse),
        None => (
            ReflectionSetup {
                params: PhysicalParams::new(1.0, 1e-3, 0.5)?,
                length: 1.0,
                n: 401,
                dt: 2.5e-3,
                scheme: Scheme::TrBdf2,
            },
            PulseConfig::default(),
        ),
    };
    let dir = out_dir(out, cfg);
    let mut summary = Summary::new();
    summary
        .push_num("c", setup.params.c())
        .push_num("beta", setup.params.beta())
        .push_num("gamma", setup.params.gamma())
        .push("n", setup.n)
        .push_num("length", setup.length)
        .push_num("dt", setup.dt)
        .push_num("amplitude", pulse.amplitude)
        .push_num("center", pulse.center)
        .push_num("width", pulse.width)
        .push_num("probe", pulse.probe);
    let mut results: Vec<ReflectionResult> = Vec::new();
    for v in variants {
        match reflection_experiment(&pulse, v, &setup) {
            Ok(r) => results.push(r),
            Err(e) => return fail(&dir, summary, e),
        }
    }
    let mut csv = String::from("variant,incident_amp,reflected_amp,ratio\n");
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.variant.name(),
            num(r.incident_amp),
            num(r.reflected_amp),
            num(r.ratio)
        ));
        summary.push_num(&format!("ratio_{}", r.variant.name()), r.ratio);
    }
    summary.push("status", "completed");
    io::write_text(&dir.join("reflection.csv"), &csv)?;
    io::write_report(&summary, &dir.join("summary.txt"))?;
    Ok(0)
}

fn compat_check(cfg: &RunConfig, out: &OutArg) -> Result<i32> {
    let dir = out_dir(out, Some(cfg));
    let mut summary = base_summary(cfg);
    summary.push("recipe", cfg.recipe.id());
    let grid = cfg.grid.build()?;
    let data = cfg.recipe.build(&grid, &cfg.params)?;
    let residual = match compatibility_residual(&data, &cfg.params, &grid) {
        Ok(r) => r,
        Err(e) => return fail(&dir, summary, e),
    };
    let max = residual.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    summary
        .push("status", "completed")
        .push("compatible", max < crate::experiments::COMP_TOL)
        .push_num("max_residual", max)
        .push_num("tolerance", crate::experiments::COMP_TOL);
    if cfg.enforce_compatibility {
        match enforce_compatibility(&data, &cfg.params, &grid) {
            Ok(fix) => {
                summary
                    .push_num("corrected_max_residual", fix.residual_after)
                    .push_num("correction_norm", fix.correction_norm)
                    .push_num("condition", fix.condition);
            }
            Err(e) => return fail(&dir, summary, e),
        }
    }
    let mut csv = String::from("node,x,y,residual\n");
    for (b, r) in grid.boundary().iter().zip(&residual) {
        let [x, y] = grid.coords(b.node);
        csv.push_str(&format!("{},{},{},{}\n", b.node, num(x), num(y), num(*r)));
    }
    io::write_text(&dir.join("compat.csv"), &csv)?;
    io::write_report(&summary, &dir.join("summary.txt"))?;
    Ok(0)
}

fn mms(cfg: &RunConfig, out: &OutArg) -> Result<i32> {
    expect_kind(cfg, ExperimentKind::Mms)?;
    let dir = out_dir(out, Some(cfg));
    let mut summary = base_summary(cfg);
    summary
        .push("scheme", cfg.stepper.scheme.name())
        .push_num("eps", cfg.mms.eps)
        .push_num("rate", cfg.mms.rate)
        .push_num("t_end", cfg.t_end);
    let study = cfg.mms_study();
    let orders = match mms_convergence_study(&study) {
        Ok(o) => o,
        Err(e) => return fail(&dir, summary, e),
    };
    let mut csv = String::from("study,step,error,order\n");
    for (i, (n, e)) in orders.spatial_errors.iter().enumerate() {
        let order = if i == 0 { f64::NAN } else { orders.spatial_orders[i - 1] };
        csv.push_str(&format!(
            "space,{},{},{}\n",
            num(1.0 / (*n - 1) as f64),
            num(*e),
            num(order)
        ));
    }
    for (i, (dt, d)) in orders.temporal_differences.iter().enumerate() {
        let order = if i == 0 {
            f64::NAN
        } else {
            orders.temporal_orders[i - 1]
        };
        csv.push_str(&format!("time,{},{},{}\n", num(*dt), num(*d), num(order)));
    }
    summary.push("status", "completed");
    if let Some(p) = orders.spatial_order() {
        summary.push_num("spatial_order", p);
    }
    if let Some(p) = orders.temporal_order() {
        summary.push_num("temporal_order", p);
    }
    io::write_text(&dir.join("mms.csv"), &csv)?;
    io::write_report(&summary, &dir.join("summary.txt"))?;
    Ok(0)
}
