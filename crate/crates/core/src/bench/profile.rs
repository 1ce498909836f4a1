//! Convergence test and performance profiles over evaluation counts.

use std::collections::BTreeMap;

use thiserror::Error;

use super::RunRecord;

/// First evaluation at which the best value closes all but a `tol`
/// fraction of the gap between `f0` and `f_best_overall`:
/// `best ≤ f_best + tol (f0 - f_best)`.
///
/// A record whose `f0` already equals `f_best_overall` converges at
/// evaluation 1.
pub fn convergence_eval_count(record: &RunRecord, f_best_overall: f64, tol: f64) -> Option<usize> {
    if record.f0 == f_best_overall {
        return Some(1);
    }
    let threshold = f_best_overall + tol * (record.f0 - f_best_overall);
    record
        .trace
        .iter()
        .find(|t| t.best <= threshold)
        .map(|t| t.eval)
}

/// Evaluation counts to convergence, indexed by solver then problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub solvers: Vec<String>,
    /// `(problem_id, n)`
    pub problems: Vec<(String, usize)>,
    /// `nf[s][p]`, absent when solver `s` never converged on problem `p`.
    pub nf: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("a profile needs at least two solvers, got {0}")]
    TooFewSolvers(usize),
    #[error("a profile needs at least one problem")]
    NoProblems,
    #[error("no run of solver `{solver}` on problem `{problem}` (n = {n})")]
    MissingRun {
        solver: String,
        problem: String,
        n: usize,
    },
    #[error("duplicate run of solver `{solver}` on problem `{problem}` (n = {n})")]
    DuplicateRun {
        solver: String,
        problem: String,
        n: usize,
    },
}

/// Reference value per problem: the best value any solver reached, lowered
/// to the problem's known bound when one is given.
pub fn best_overall(
    records: &[RunRecord],
    f_lower: &dyn Fn(&str, usize) -> Option<f64>,
) -> BTreeMap<(String, usize), f64> {
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for r in records {
        let key = (r.problem_id.clone(), r.n);
        let run_best = r.trace.iter().map(|t| t.best).fold(r.f0, f64::min);
        let entry = best.entry(key).or_insert(f64::INFINITY);
        *entry = entry.min(run_best);
    }
    for ((p, n), v) in best.iter_mut() {
        if let Some(lower) = f_lower(p, *n) {
            *v = v.min(lower);
        }
    }
    best
}

/// Applies the convergence test at `tol` to every record.
pub fn cost_table(
    records: &[RunRecord],
    tol: f64,
    f_lower: &dyn Fn(&str, usize) -> Option<f64>,
) -> Result<CostTable, ProfileError> {
    let mut solvers: Vec<String> = Vec::new();
    let mut problems: Vec<(String, usize)> = Vec::new();
    for r in records {
        if !solvers.contains(&r.solver_id) {
            solvers.push(r.solver_id.clone());
        }
        let key = (r.problem_id.clone(), r.n);
        if !problems.contains(&key) {
            problems.push(key);
        }
    }
    if solvers.len() < 2 {
        return Err(ProfileError::TooFewSolvers(solvers.len()));
    }
    if problems.is_empty() {
        return Err(ProfileError::NoProblems);
    }
    let best = best_overall(records, f_lower);
    let mut cells: Vec<Vec<Option<Option<usize>>>> = vec![vec![None; problems.len()]; solvers.len()];
    for r in records {
        let s = solvers.iter().position(|x| *x == r.solver_id).expect("collected above");
        let key = (r.problem_id.clone(), r.n);
        let p = problems.iter().position(|x| *x == key).expect("collected above");
        if cells[s][p].is_some() {
            return Err(ProfileError::DuplicateRun {
                solver: r.solver_id.clone(),
                problem: r.problem_id.clone(),
                n: r.n,
            });
        }
        cells[s][p] = Some(convergence_eval_count(r, best[&key], tol));
    }
    let mut nf = Vec::with_capacity(solvers.len());
    for (s, row) in cells.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (p, cell) in row.into_iter().enumerate() {
            match cell {
                Some(v) => out.push(v),
                None => {
                    return Err(ProfileError::MissingRun {
                        solver: solvers[s].clone(),
                        problem: problems[p].0.clone(),
                        n: problems[p].1,
                    })
                }
            }
        }
        nf.push(out);
    }
    Ok(CostTable {
        solvers,
        problems,
        nf,
    })
}

/// One solver's step curve: at each breakpoint `t`, the fraction of
/// problems with `log2(ratio) ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver_id: String,
    pub points: Vec<(f64, f64)>,
}

/// `log2(nf / min_s nf)` per solver and problem, `+inf` when the solver
/// did not converge (or nobody did).
pub fn log2_ratios(table: &CostTable) -> Vec<Vec<f64>> {
    let problems = table.problems.len();
    let min_nf: Vec<Option<usize>> = (0..problems)
        .map(|p| table.nf.iter().filter_map(|row| row[p]).min())
        .collect();
    table
        .nf
        .iter()
        .map(|row| {
            row.iter()
                .zip(&min_nf)
                .map(|(nf, min)| match (nf, min) {
                    (Some(a), Some(b)) => (*a as f64 / *b as f64).log2(),
                    _ => f64::INFINITY,
                })
                .collect()
        })
        .collect()
}

/// Dolan–Moré performance profile over evaluation counts.
///
/// Breakpoints are all finite log-ratios of all solvers (and 0), so every
/// curve is evaluated at the same abscissae.
pub fn performance_profile(table: &CostTable) -> Result<Vec<ProfileCurve>, ProfileError> {
    if table.solvers.len() < 2 {
        return Err(ProfileError::TooFewSolvers(table.solvers.len()));
    }
    if table.problems.is_empty() {
        return Err(ProfileError::NoProblems);
    }
    let ratios = log2_ratios(table);
    let mut breakpoints: Vec<f64> = ratios
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .chain(std::iter::once(0.0))
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let total = table.problems.len() as f64;
    Ok(table
        .solvers
        .iter()
        .zip(&ratios)
        .map(|(solver, row)| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            let mut solved = 0;
            let points = breakpoints
                .iter()
                .map(|&t| {
                    while solved < sorted.len() && sorted[solved] <= t {
                        solved += 1;
                    }
                    (t, solved as f64 / total)
                })
                .collect();
            ProfileCurve {
                solver_id: solver.clone(),
                points,
            }
        })
        .collect())
}
