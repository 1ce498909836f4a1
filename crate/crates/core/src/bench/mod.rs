//! Benchmark harness: solver-by-problem matrices, convergence tests,
//! performance profiles, and their CSV/SVG outputs.

pub mod cli;
pub mod manifest;
pub mod output;
pub mod profile;

use rayon::prelude::*;

use crate::driver::{minimize, OptionsError, RunResult, SolverOptions};
use crate::oracle::{make_problem, CatalogError, TracePoint};

pub use manifest::Manifest;
pub use output::{emit_outputs, read_runs_csv, write_runs_csv, OutputError, RunRow};
pub use profile::{
    convergence_eval_count, cost_table, performance_profile, CostTable, ProfileCurve, ProfileError,
};

/// Best-so-far trace of one (solver, problem) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver_id: String,
    pub problem_id: String,
    pub n: usize,
    pub f0: f64,
    pub trace: Vec<TracePoint>,
    pub status: String,
}

impl RunRecord {
    pub fn from_run(solver_id: impl Into<String>, run: &RunResult) -> Self {
        Self {
            solver_id: solver_id.into(),
            problem_id: run.problem.clone(),
            n: run.n,
            f0: run.f0,
            trace: run.trace.clone(),
            status: run.status.to_string(),
        }
    }

    /// Final best value (`f0` when nothing was evaluated).
    pub fn f_fin(&self) -> f64 {
        self.trace.last().map_or(self.f0, |t| t.best)
    }

    /// Number of function evaluations, absent when the run never evaluated.
    pub fn nf(&self) -> Option<usize> {
        self.trace.last().map(|t| t.eval)
    }

    pub fn row(&self) -> RunRow {
        RunRow {
            solver_id: self.solver_id.clone(),
            problem_id: self.problem_id.clone(),
            n: self.n,
            f0: self.f0,
            f_fin: self.f_fin(),
            nf: self.nf(),
            status: self.status.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("solver `{solver}`: {source}")]
    Options {
        solver: String,
        #[source]
        source: OptionsError,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
}

/// One cell of a benchmark matrix.
#[derive(Debug, Clone)]
pub struct Cell {
    pub solver_id: String,
    pub problem: String,
    pub n: usize,
    pub options: SolverOptions,
}

/// Runs every cell concurrently; each cell owns its oracle. Records come
/// back in cell order.
pub fn run_matrix(cells: &[Cell]) -> Result<Vec<RunRecord>, BenchError> {
    cells
        .par_iter()
        .map(|cell| {
            let problem = make_problem(&cell.problem, cell.n)?;
            let run = minimize(&problem, cell.options.clone()).map_err(|source| BenchError::Options {
                solver: cell.solver_id.clone(),
                source,
            })?;
            Ok(RunRecord::from_run(cell.solver_id.clone(), &run))
        })
        .collect()
}

/// Known lower bound of a catalog problem, used as the convergence-test
/// reference alongside the best value any solver found.
pub fn catalog_f_lower(name: &str, n: usize) -> Option<f64> {
    make_problem(name, n).ok().and_then(|p| p.f_lower)
}

/// Profiles at each tolerance, in the order given.
pub fn profiles(records: &[RunRecord], tols: &[f64]) -> Result<Vec<(f64, Vec<ProfileCurve>)>, BenchError> {
    tols.iter()
        .map(|&tol| {
            let table = cost_table(records, tol, &catalog_f_lower)?;
            Ok((tol, performance_profile(&table)?))
        })
        .collect()
}
