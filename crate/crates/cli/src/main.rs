use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use pbiharm_dg::study::{run_study, sigma_sweep, to_csv, RunConfig};

/// Convergence study for the dG p-biharmonic discretisation on the unit square.
#[derive(Parser, Debug)]
#[command(name = "pbiharm", version, allow_negative_numbers = true)]
struct Args {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    /// Polynomial degree (2, 3 or 4).
    #[arg(long)]
    k: Option<usize>,
    /// Penalty parameter.
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated mesh levels, e.g. `4,8,16`.
    #[arg(long)]
    levels: Option<String>,
    /// Output directory for `rates.csv`, plot data and VTK files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `solution_n<N>.vtk` per level (requires `--out`).
    #[arg(long)]
    emit_vtk: bool,
    /// Regularisation parameter of the nonlinearity.
    #[arg(long)]
    eps: Option<f64>,
    /// Newton tolerance relative to the load vector.
    #[arg(long)]
    tol: Option<f64>,
    /// Extra quadrature exactness.
    #[arg(long)]
    quad_bump: Option<usize>,
    /// Boundary gradient flux of the discrete Hessian: `clamped` or `ip`.
    #[arg(long)]
    flux: Option<String>,
    /// Repeat the study for each of these comma-separated penalty values.
    #[arg(long)]
    sigma_sweep: Option<String>,
}

fn config(args: &Args) -> Result<RunConfig<f64>> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => RunConfig::new(2.0, 2),
    };
    let overrides = [
        ("p", args.p.map(|v| v.to_string())),
        ("k", args.k.map(|v| v.to_string())),
        ("levels", args.levels.clone()),
        ("sigma", args.sigma.map(|v| v.to_string())),
        ("eps", args.eps.map(|v| v.to_string())),
        ("tol", args.tol.map(|v| v.to_string())),
        ("quad_bump", args.quad_bump.map(|v| v.to_string())),
        ("flux", args.flux.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.emit_vtk |= args.emit_vtk;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<bool> {
    let cfg = config(args)?;
    let start = Instant::now();
    let outcomes = match &args.sigma_sweep {
        Some(list) => {
            let sigmas = list.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().context("parsing --sigma-sweep")?;
            sigma_sweep(&cfg, &sigmas)?
        }
        None => vec![(cfg.sigma, run_study(&cfg)?)],
    };
    let mut ok = true;
    for (sigma, outcome) in &outcomes {
        println!("# p = {}, k = {}, sigma = {sigma}", cfg.p, cfg.k);
        print!("{}", to_csv(&outcome.records));
        if let Some(n) = outcome.failed_level {
            eprintln!("solver did not converge on level n = {n}");
            ok = false;
        }
    }
    eprintln!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(ok)
}

/// Exit codes: 0 success, 1 invalid input or I/O error, 2 a level did not converge.
fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
