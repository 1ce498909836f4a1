//! Derivative-free unconstrained optimization by iterated subspace search.
//!
//! Each iteration estimates the gradient by forward differences on a
//! coordinate stencil of radius `τδ`, builds a low-dimensional subspace
//! that contains the estimate (conjugate-gradient or limited-memory
//! quasi-Newton style), searches it with a small derivative-free inner
//! solver, and falls back to a normalized steepest-descent point whenever
//! the search does not achieve `f_{k+1} ≤ f_k - η δ²`. The radius `δ`
//! doubles after a sufficient decrease with `‖gg‖ ≥ ηδ` and halves
//! otherwise.
//!
//! ```
//! use subdfo::driver::{minimize, SolverOptions};
//! use subdfo::oracle::make_problem;
//!
//! let problem = make_problem("sphere", 10).unwrap();
//! let run = minimize(&problem, SolverOptions::default()).unwrap();
//! assert!(run.f <= 1e-8);
//! ```
//!
//! The [`bench`] module runs solver-by-problem matrices and produces
//! performance profiles; the `subdfo` binary exposes it on the command line.

pub mod bench;
pub mod driver;
pub mod gradient;
pub mod linalg;
pub mod oracle;
pub mod subsolver;
pub mod subspace;

pub use driver::{minimize, RunResult, SolverOptions, Status};
pub use oracle::{make_problem, EvaluationOracle, ProblemSpec};
