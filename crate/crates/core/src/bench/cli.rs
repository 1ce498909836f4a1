//! Command-line front end: `run`, `bench` and `problems`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::output::{emit_outputs, emit_run};
use super::{profiles, run_matrix, Manifest};
use crate::driver::{minimize, SolverOptions, TauMode};
use crate::oracle::{catalog, make_problem};
use crate::subsolver::InnerMethod;
use crate::subspace::SubspaceKind;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SUBDFO_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "subdfo", version, about = "Derivative-free subspace optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize one catalog problem and print f0, f_fin and NF.
    Run(RunArgs),
    /// Run a solver-by-problem matrix from a manifest and write profiles.
    Bench(BenchArgs),
    /// List the problem catalog.
    Problems,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "lmqn")]
    subspace: SubspaceKind,
    #[arg(long, default_value_t = 1e-2)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    /// Finite-difference scale; default n^(-1/2).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 5)]
    memory: usize,
    #[arg(long, default_value = "nelder-mead")]
    inner: InnerMethod,
    /// Inner evaluations per iteration; default 10 (p + 1), 0 disables.
    #[arg(long)]
    inner_budget: Option<usize>,
    /// Chop every value to this many significant digits.
    #[arg(long)]
    truncate_digits: Option<u32>,
    /// Default 500 (n + 1).
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for trace.csv and iterations.csv; default $SUBDFO_OUT_DIR,
    /// nothing is written when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated convergence tolerances.
    #[arg(long, default_value = "1e-1,1e-3", value_delimiter = ',', value_parser = parse_tol)]
    tol: Vec<f64>,
    /// Default $SUBDFO_OUT_DIR, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; default one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_tol(t: &str) -> Result<f64, String> {
    let v: f64 = t.trim().parse().map_err(|_| format!("invalid tolerance `{t}`"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1), got {v}"))
    }
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit code: 0 on success, 1 on runtime failure, 2 on
/// usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Problems => cmd_problems(out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let problem = make_problem(&a.problem, a.n).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut options = SolverOptions {
        eta: a.eta,
        delta0: a.delta0,
        tau: a.tau.map_or(TauMode::Auto, TauMode::Fixed),
        subspace: a.subspace,
        memory: a.memory,
        max_evals: a.max_evals,
        truncation_digits: a.truncate_digits,
        seed: a.seed,
        ..SolverOptions::default()
    };
    options.inner.method = a.inner;
    options.inner.budget = a.inner_budget;
    let run = minimize(&problem, options).map_err(|e| Failure::Usage(e.to_string()))?;

    writeln!(out, "problem = {}", run.problem).map_err(io_fail)?;
    writeln!(out, "n = {}", run.n).map_err(io_fail)?;
    writeln!(out, "f0 = {:e}", run.f0).map_err(io_fail)?;
    writeln!(out, "f_fin = {:e}", run.f).map_err(io_fail)?;
    writeln!(out, "NF = {}", run.evals).map_err(io_fail)?;
    writeln!(out, "status = {}", run.status).map_err(io_fail)?;

    if let Some(dir) = a.out.or_else(env_out_dir) {
        let written = emit_run(&run.trace, &run.iterations, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
        for p in written {
            writeln!(out, "wrote {}", p.display()).map_err(io_fail)?;
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let manifest = Manifest::load(&a.manifest).map_err(|e| Failure::Usage(e.to_string()))?;
    let cells = manifest.cells();
    for c in &cells {
        c.options
            .validate()
            .map_err(|e| Failure::Usage(format!("solver `{}`: {e}", c.solver_id)))?;
    }
    let dir = a.out.or_else(env_out_dir).unwrap_or_else(|| PathBuf::from("results"));

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let records = pool
        .install(|| run_matrix(&cells))
        .map_err(|e| Failure::Runtime(e.to_string()))?;

    let profs = if manifest.solvers.len() >= 2 {
        profiles(&records, &a.tol).map_err(|e| Failure::Runtime(e.to_string()))?
    } else {
        writeln!(out, "one solver only: profiles skipped").map_err(io_fail)?;
        Vec::new()
    };
    let written = emit_outputs(&records, &profs, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    for r in &records {
        writeln!(
            out,
            "{:<12} {:<12} n={:<6} f0={:<12e} f_fin={:<12e} NF={} {}",
            r.solver_id,
            r.problem_id,
            r.n,
            r.f0,
            r.f_fin(),
            r.nf().map_or_else(|| "-".to_string(), |v| v.to_string()),
            r.status
        )
        .map_err(io_fail)?;
    }
    for p in written {
        writeln!(out, "wrote {}", p.display()).map_err(io_fail)?;
    }
    Ok(())
}

fn cmd_problems(out: &mut dyn Write) -> Result<(), Failure> {
    for e in catalog() {
        writeln!(out, "{:<12} {}  [x0: {}; {}]", e.name, e.formula, e.start, e.requirement).map_err(io_fail)?;
    }
    Ok(())
}
