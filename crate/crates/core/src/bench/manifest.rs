//! Benchmark manifests.
//!
//! A manifest is a TOML file with optional top-level defaults, a list of
//! problems and a list of solver configurations:
//!
//! ```toml
//! truncate_digits = 3      # optional; omit for exact values
//! seed = 0                 # optional, default 0
//! max_evals = 50500        # optional; default 500 (n + 1) per problem
//!
//! [[problem]]
//! name = "arwhead"
//! n = 100
//!
//! [[solver]]
//! id = "lmqn"              # label used in runs.csv and the profiles
//! subspace = "lmqn"        # cg | lmqn | lmqn-qn
//! memory = 5               # optional
//! eta = 0.01               # optional
//! delta0 = 1.0             # optional
//! tau = 0.1                # optional; default n^(-1/2)
//! inner = "nelder-mead"    # optional: nelder-mead | quadratic-model
//! inner_budget = 40        # optional; default 10 (p + 1)
//! truncate_digits = 3      # optional per-solver override
//! max_evals = 1000         # optional per-solver override
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::Cell;
use crate::driver::{SolverOptions, TauMode};
use crate::oracle::make_problem;
use crate::oracle::CatalogError;
use crate::subsolver::InnerMethod;
use crate::subspace::SubspaceKind;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{}: {source}", path.display())]
    Read {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("manifest lists no {0}")]
    Empty(&'static str),
    #[error("duplicate solver id `{0}`")]
    DuplicateSolver(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub name: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub id: String,
    pub subspace: SubspaceKind,
    pub memory: Option<usize>,
    pub eta: Option<f64>,
    pub delta0: Option<f64>,
    pub tau: Option<f64>,
    pub inner: Option<InnerMethod>,
    pub inner_budget: Option<usize>,
    pub truncate_digits: Option<u32>,
    pub max_evals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub truncate_digits: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    pub max_evals: Option<usize>,
    #[serde(rename = "problem", default)]
    pub problems: Vec<ProblemEntry>,
    #[serde(rename = "solver", default)]
    pub solvers: Vec<SolverEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let m: Manifest = toml::from_str(text)?;
        if m.problems.is_empty() {
            return Err(ManifestError::Empty("problems"));
        }
        if m.solvers.is_empty() {
            return Err(ManifestError::Empty("solvers"));
        }
        for (i, s) in m.solvers.iter().enumerate() {
            if m.solvers[..i].iter().any(|o| o.id == s.id) {
                return Err(ManifestError::DuplicateSolver(s.id.clone()));
            }
        }
        for p in &m.problems {
            make_problem(&p.name, p.n)?;
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn options_for(&self, solver: &SolverEntry) -> SolverOptions {
        let mut o = SolverOptions {
            subspace: solver.subspace,
            truncation_digits: solver.truncate_digits.or(self.truncate_digits),
            max_evals: solver.max_evals.or(self.max_evals),
            seed: self.seed,
            ..SolverOptions::default()
        };
        if let Some(m) = solver.memory {
            o.memory = m;
        }
        if let Some(eta) = solver.eta {
            o.eta = eta;
        }
        if let Some(d) = solver.delta0 {
            o.delta0 = d;
        }
        if let Some(t) = solver.tau {
            o.tau = TauMode::Fixed(t);
        }
        if let Some(m) = solver.inner {
            o.inner.method = m;
        }
        if solver.inner_budget.is_some() {
            o.inner.budget = solver.inner_budget;
        }
        o
    }

    /// Solver-major list of all (solver, problem) cells.
    pub fn cells(&self) -> Vec<Cell> {
        self.solvers
            .iter()
            .flat_map(|s| {
                let options = self.options_for(s);
                self.problems.iter().map(move |p| Cell {
                    solver_id: s.id.clone(),
                    problem: p.name.clone(),
                    n: p.n,
                    options: options.clone(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
truncate_digits = 3
seed = 4

[[problem]]
name = "arwhead"
n = 20

[[problem]]
name = "sphere"
n = 5

[[solver]]
id = "cg"
subspace = "cg"

[[solver]]
id = "qn"
subspace = "lmqn-qn"
memory = 3
tau = 0.5
inner = "quadratic-model"
inner_budget = 30
truncate_digits = 6
"#;

    #[test]
    fn parses_and_expands() {
        let m = Manifest::parse(EXAMPLE).unwrap();
        assert_eq!(m.problems.len(), 2);
        let cells = m.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].solver_id, "cg");
        assert_eq!(cells[0].options.truncation_digits, Some(3));
        assert_eq!(cells[0].options.seed, 4);
        let qn = &cells[3].options;
        assert_eq!(cells[3].problem, "sphere");
        assert_eq!(qn.subspace, SubspaceKind::LmqnQn);
        assert_eq!(qn.memory, 3);
        assert_eq!(qn.tau, TauMode::Fixed(0.5));
        assert_eq!(qn.inner.method, InnerMethod::QuadraticModel);
        assert_eq!(qn.inner.budget, Some(30));
        assert_eq!(qn.truncation_digits, Some(6));
    }

    #[test]
    fn rejects_bad_manifests() {
        assert!(matches!(
            Manifest::parse("bogus = 1\n[[problem]]\nname='sphere'\nn=2\n[[solver]]\nid='a'\nsubspace='cg'"),
            Err(ManifestError::Parse(_))
        ));
        assert!(matches!(
            Manifest::parse("[[solver]]\nid='a'\nsubspace='cg'"),
            Err(ManifestError::Empty("problems"))
        ));
        assert!(matches!(
            Manifest::parse("[[problem]]\nname='nope'\nn=2\n[[solver]]\nid='a'\nsubspace='cg'"),
            Err(ManifestError::Catalog(_))
        ));
        assert!(matches!(
            Manifest::parse("[[problem]]\nname='sphere'\nn=2\n[[solver]]\nid='a'\nsubspace='cg'\n[[solver]]\nid='a'\nsubspace='lmqn'"),
            Err(ManifestError::DuplicateSolver(_))
        ));
        assert!(matches!(
            Manifest::parse("[[problem]]\nname='sphere'\nn=2\n[[solver]]\nid='a'\nsubspace='bfgs'"),
            Err(ManifestError::Parse(_))
        ));
    }
}
