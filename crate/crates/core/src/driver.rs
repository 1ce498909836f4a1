//! The main iteration: estimate a gradient, build a subspace containing it,
//! search the subspace, certify sufficient decrease, and double or halve
//! the radius `δ`.

use std::fmt;

use rand::rngs::StdRng;
use rand::SeedableRng;
use thiserror::Error;

use crate::gradient::{default_tau, estimate_gradient, stencil_step};
use crate::linalg::{norm, sub};
use crate::oracle::{value_or_inf, EvalError, EvaluationOracle, ProblemSpec, TracePoint};
use crate::subsolver::{
    safeguard_accept, solve_subspace, AcceptedVia, InnerSolverSpec, Safeguard, StepOutcome,
};
use crate::subspace::{build_subspace, HistoryPairs, SubspaceKind};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMode {
    /// `τ = n^(-1/2)`
    Auto,
    Fixed(f64),
}

impl TauMode {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            TauMode::Auto => default_tau(n),
            TauMode::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub eta: f64,
    pub delta0: f64,
    pub tau: TauMode,
    pub subspace: SubspaceKind,
    pub memory: usize,
    pub inner: InnerSolverSpec,
    pub delta_min: f64,
    /// `None` means `500 (n + 1)`.
    pub max_evals: Option<usize>,
    pub truncation_digits: Option<u32>,
    /// Seeds the inner solver's tie-breaking.
    pub seed: u64,
    pub parallel_stencil: bool,
    /// Keep a copy of every iterate in the log.
    pub record_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eta: 1e-2,
            delta0: 1.0,
            tau: TauMode::Auto,
            subspace: SubspaceKind::Lmqn,
            memory: 5,
            inner: InnerSolverSpec::default(),
            delta_min: 1e-8,
            max_evals: None,
            truncation_digits: None,
            seed: 0,
            parallel_stencil: true,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionsError {
    #[error("`{field}` must be positive and finite, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("delta_min ({delta_min}) must be below delta0 ({delta0})")]
    DeltaMinTooLarge { delta_min: f64, delta0: f64 },
    #[error("memory must be at least 1")]
    ZeroMemory,
    #[error("truncation digits must be at least 1")]
    ZeroTruncation,
    #[error("max_evals must be at least 1")]
    ZeroMaxEvals,
    #[error("inner budget {budget} is below p + 2 = {required} for the largest subspace (use 0 to disable)")]
    InnerBudgetTooSmall { budget: usize, required: usize },
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), OptionsError> {
        let positive = |field: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(OptionsError::NotPositive { field, value })
            }
        };
        positive("eta", self.eta)?;
        positive("delta0", self.delta0)?;
        positive("delta_min", self.delta_min)?;
        positive("inner.initial_scale", self.inner.initial_scale)?;
        if let TauMode::Fixed(t) = self.tau {
            positive("tau", t)?;
        }
        if self.delta_min >= self.delta0 {
            return Err(OptionsError::DeltaMinTooLarge {
                delta_min: self.delta_min,
                delta0: self.delta0,
            });
        }
        if self.memory == 0 {
            return Err(OptionsError::ZeroMemory);
        }
        if self.truncation_digits == Some(0) {
            return Err(OptionsError::ZeroTruncation);
        }
        if self.max_evals == Some(0) {
            return Err(OptionsError::ZeroMaxEvals);
        }
        if let Some(budget) = self.inner.budget {
            let required = self.subspace.max_dim(self.memory) + 2;
            if budget != 0 && budget < required {
                return Err(OptionsError::InnerBudgetTooSmall { budget, required });
            }
        }
        Ok(())
    }

    pub fn max_evals_for(&self, n: usize) -> usize {
        self.max_evals.unwrap_or(500 * (n + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    DeltaConverged,
    BudgetExhausted,
    /// The objective is not finite at the current iterate.
    Stalled,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::DeltaConverged => "delta_converged",
            Status::BudgetExhausted => "budget_exhausted",
            Status::Stalled => "stalled",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything carried from one iteration to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vec<f64>,
    /// `+inf` until the first center evaluation.
    pub f: f64,
    pub delta: f64,
    /// Approximate gradient at `x_prev`.
    pub gg: Option<Vec<f64>>,
    pub history: HistoryPairs,
    pub x_prev: Option<Vec<f64>>,
    pub status: Status,
    center_known: bool,
}

/// Record of one iteration, sufficient to replay the radius recurrence
/// and re-check the acceptance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub k: usize,
    pub f_k: f64,
    pub delta: f64,
    /// Finite-difference step used by the stencil.
    pub step: f64,
    pub gg_norm: f64,
    /// Stencil index whose value was not finite; the iteration was skipped.
    pub stencil_failure: Option<usize>,
    pub subspace_dim: usize,
    /// `‖gg - B Bᵀ gg‖ / ‖gg‖`
    pub basis_membership: f64,
    /// `‖BᵀB - I‖` (max entry)
    pub basis_orthonormality: f64,
    pub f_subspace: f64,
    pub safeguard: Safeguard,
    pub f_next: f64,
    pub accepted_via: AcceptedVia,
    pub decrease_flag: bool,
    pub delta_next: f64,
    pub stencil_evals: usize,
    pub inner_evals: usize,
    pub safeguard_evals: usize,
    /// Present when `record_iterates` is set.
    pub x_k: Option<Vec<f64>>,
}

impl IterationLog {
    pub fn evals(&self) -> usize {
        self.stencil_evals + self.inner_evals + self.safeguard_evals
    }
}

/// Step 4 of the iteration: double `δ` on a sufficiently large gradient
/// estimate with sufficient decrease, otherwise halve it.
pub fn update_delta(delta: f64, gg_norm: f64, decrease_flag: bool, eta: f64) -> f64 {
    if gg_norm >= eta * delta && decrease_flag {
        2.0 * delta
    } else {
        delta / 2.0
    }
}

pub struct Solver<'a> {
    oracle: &'a EvaluationOracle,
    options: SolverOptions,
    tau: f64,
    rng: StdRng,
    log: Vec<IterationLog>,
    f0: Option<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(oracle: &'a EvaluationOracle, options: SolverOptions) -> Result<Self, OptionsError> {
        options.validate()?;
        let tau = options.tau.resolve(oracle.n());
        let rng = StdRng::seed_from_u64(options.seed);
        Ok(Self {
            oracle,
            options,
            tau,
            rng,
            log: Vec::new(),
            f0: None,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn log(&self) -> &[IterationLog] {
        &self.log
    }

    pub fn initial_state(&self) -> SolverState {
        SolverState {
            k: 0,
            x: self.oracle.problem().x0.clone(),
            f: f64::INFINITY,
            delta: self.options.delta0,
            gg: None,
            history: HistoryPairs::new(self.options.memory),
            x_prev: None,
            status: Status::Running,
            center_known: false,
        }
    }

    /// Runs one iteration. A state whose status is not `Running` is
    /// returned unchanged.
    pub fn step(&mut self, mut state: SolverState) -> SolverState {
        if state.status != Status::Running {
            return state;
        }
        let n = state.x.len();
        let eta = self.options.eta;
        let delta = state.delta;

        // Step 1: forward-difference stencil, reusing the center value.
        let center_evals = usize::from(!state.center_known);
        if !state.center_known {
            match self.oracle.evaluate(&state.x) {
                Ok(f) => {
                    state.f = f;
                    state.center_known = true;
                    self.f0.get_or_insert(f);
                }
                Err(EvalError::BudgetExhausted { .. }) => {
                    state.status = Status::BudgetExhausted;
                    return state;
                }
                Err(_) => {
                    self.f0.get_or_insert(f64::INFINITY);
                    state.status = Status::Stalled;
                    return state;
                }
            }
        }
        if self.oracle.remaining() < n {
            state.status = Status::BudgetExhausted;
            return state;
        }
        let step = stencil_step(&state.x, delta, self.tau);
        let parallel = self.options.parallel_stencil && n >= 64;
        let mut values = Vec::with_capacity(n + 1);
        values.push(state.f);
        values.extend(
            self.oracle
                .evaluate_stencil(&state.x, step, parallel)
                .into_iter()
                .map(value_or_inf),
        );
        let stencil_evals = n + center_evals;
        let x_k = self.options.record_iterates.then(|| state.x.clone());

        let estimate = match estimate_gradient(&values, step) {
            Ok(e) => e,
            Err(err) => {
                let index = match err {
                    crate::gradient::GradientError::NonFinite { index } => index,
                    crate::gradient::GradientError::TooShort { .. } => 0,
                };
                let delta_next = delta / 2.0;
                self.log.push(IterationLog {
                    k: state.k,
                    f_k: state.f,
                    delta,
                    step,
                    gg_norm: f64::NAN,
                    stencil_failure: Some(index),
                    subspace_dim: 0,
                    basis_membership: 0.0,
                    basis_orthonormality: 0.0,
                    f_subspace: state.f,
                    safeguard: Safeguard::Degenerate,
                    f_next: state.f,
                    accepted_via: AcceptedVia::Stay,
                    // Literal definition; can hold when ηδ² is below the
                    // resolution of f_k, and δ halves regardless.
                    decrease_flag: state.f <= state.f - eta * delta * delta,
                    delta_next,
                    stencil_evals,
                    inner_evals: 0,
                    safeguard_evals: 0,
                    x_k,
                });
                state.delta = delta_next;
                state.k += 1;
                self.finish_status(&mut state);
                return state;
            }
        };
        let gg = estimate.gg;
        let gg_norm = norm(&gg);

        if let (Some(prev_gg), Some(x_prev)) = (&state.gg, &state.x_prev) {
            let s = sub(&state.x, x_prev);
            if norm(&s) > 0.0 {
                let y = sub(&gg, prev_gg);
                state.history.push(s, y);
            }
        }

        // Steps 2 and 3.
        let (outcome, subspace_dim, membership, orthonormality, f_subspace) = if gg_norm == 0.0 {
            let outcome = StepOutcome {
                x_next: state.x.clone(),
                f_next: state.f,
                accepted_via: AcceptedVia::Stay,
                decrease_flag: state.f <= state.f - eta * delta * delta,
                evals_used: 0,
                inner_evals: 0,
                safeguard: Safeguard::Degenerate,
            };
            (outcome, 0, 0.0, 0.0, state.f)
        } else {
            let basis = build_subspace(
                self.options.subspace,
                &gg,
                &state.x,
                state.x_prev.as_deref(),
                &state.history,
            );
            let membership = basis.distance(&gg) / gg_norm;
            let orthonormality = basis.orthonormality_error();
            let solution = solve_subspace(
                self.oracle,
                &state.x,
                state.f,
                &basis,
                &self.options.inner,
                delta,
                self.oracle.remaining(),
                &mut self.rng,
            );
            let f_subspace = solution.f;
            let outcome = safeguard_accept(self.oracle, &state.x, state.f, &gg, solution, eta, delta);
            (outcome, basis.dim(), membership, orthonormality, f_subspace)
        };

        // Step 4.
        let delta_next = update_delta(delta, gg_norm, outcome.decrease_flag, eta);
        self.log.push(IterationLog {
            k: state.k,
            f_k: state.f,
            delta,
            step,
            gg_norm,
            stencil_failure: None,
            subspace_dim,
            basis_membership: membership,
            basis_orthonormality: orthonormality,
            f_subspace,
            safeguard: outcome.safeguard,
            f_next: outcome.f_next,
            accepted_via: outcome.accepted_via,
            decrease_flag: outcome.decrease_flag,
            delta_next,
            stencil_evals,
            inner_evals: outcome.inner_evals,
            safeguard_evals: outcome.evals_used - outcome.inner_evals,
            x_k,
        });

        let x_k = std::mem::replace(&mut state.x, outcome.x_next);
        state.x_prev = Some(x_k);
        state.gg = Some(gg);
        state.f = outcome.f_next;
        state.delta = delta_next;
        state.k += 1;
        self.finish_status(&mut state);
        state
    }

    fn finish_status(&self, state: &mut SolverState) {
        if self.oracle.exhausted() {
            state.status = Status::BudgetExhausted;
        } else if state.delta < self.options.delta_min {
            state.status = Status::DeltaConverged;
        }
    }

    /// Iterates until the status leaves `Running`.
    pub fn run(&mut self) -> SolverState {
        let mut state = self.initial_state();
        while state.status == Status::Running {
            state = self.step(state);
        }
        state
    }

    pub fn into_result(self, state: SolverState) -> RunResult {
        let f0 = self.f0.unwrap_or(f64::INFINITY);
        let best_f = self.oracle.best_value();
        let (x, f) = match (self.oracle.best_point(), best_f) {
            (Some(x), Some(f)) => (x, f),
            _ => (state.x.clone(), state.f),
        };
        RunResult {
            problem: self.oracle.problem().name.clone(),
            n: self.oracle.n(),
            x,
            f,
            f0,
            status: state.status,
            evals: self.oracle.eval_count(),
            trace: self.oracle.trace(),
            failures: self.oracle.failures(),
            iterations: self.log,
            final_state: state,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub problem: String,
    pub n: usize,
    /// Best point ever evaluated.
    pub x: Vec<f64>,
    pub f: f64,
    pub f0: f64,
    pub status: Status,
    pub evals: usize,
    pub trace: Vec<TracePoint>,
    /// Evaluation indices that returned non-finite values.
    pub failures: Vec<usize>,
    pub iterations: Vec<IterationLog>,
    pub final_state: SolverState,
}

/// Runs the method on `oracle` until `δ < δ_min` or the oracle's budget is
/// spent. The oracle's own budget and truncation are used as configured.
pub fn minimize_with_oracle(
    oracle: &EvaluationOracle,
    options: SolverOptions,
) -> Result<RunResult, OptionsError> {
    let mut solver = Solver::new(oracle, options)?;
    let state = solver.run();
    Ok(solver.into_result(state))
}

/// Runs the method on `problem` with a fresh oracle configured from
/// `options` (truncation, `max_evals`).
pub fn minimize(problem: &ProblemSpec, options: SolverOptions) -> Result<RunResult, OptionsError> {
    options.validate()?;
    let oracle = EvaluationOracle::new(problem.clone())
        .with_truncation(options.truncation_digits)
        .with_max_evals(Some(options.max_evals_for(problem.n)));
    minimize_with_oracle(&oracle, options)
}

/// Constants from the convergence analysis, used to probe logged runs on
/// problems with known gradient Lipschitz constant `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryProbe {
    pub lipschitz: f64,
    /// Gradient error constant `τ √n L / 2`.
    pub zeta: f64,
    pub eta: f64,
    /// `2 / (L + 2η + 4ζ)`
    pub mu: f64,
}

impl TheoryProbe {
    pub fn new(lipschitz: f64, tau: f64, n: usize, eta: f64) -> Self {
        let zeta = tau * (n as f64).sqrt() * lipschitz / 2.0;
        Self {
            lipschitz,
            zeta,
            eta,
            mu: 2.0 / (lipschitz + 2.0 * eta + 4.0 * zeta),
        }
    }
}

/// Replays the invariants a correct run must satisfy from its log alone.
pub mod audit {
    use super::*;

    /// Accepted values never increase.
    pub fn monotone(run: &RunResult) -> Result<(), String> {
        for it in &run.iterations {
            if it.f_next > it.f_k {
                return Err(format!("iteration {}: f rose from {} to {}", it.k, it.f_k, it.f_next));
            }
        }
        for w in run.iterations.windows(2) {
            if w[1].f_k != w[0].f_next {
                return Err(format!("iteration {}: f_k does not continue the previous f_next", w[1].k));
            }
        }
        Ok(())
    }

    /// `f_{k+1} ≤ max{f_k - η δ², f(x_k - δ gg/‖gg‖)}` on the logged values,
    /// and the decrease flag matches its definition.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the check
    pub fn sufficient_decrease(run: &RunResult, eta: f64) -> Result<(), String> {
        for it in &run.iterations {
            let target = it.f_k - eta * it.delta * it.delta;
            let bound = match it.safeguard.bound_value(it.f_k) {
                Some(f_g) => target.max(f_g),
                None => target,
            };
            if !(it.f_next <= bound) {
                return Err(format!("iteration {}: {} exceeds bound {}", it.k, it.f_next, bound));
            }
            if it.decrease_flag != (it.f_next <= target) {
                return Err(format!("iteration {}: decrease flag inconsistent", it.k));
            }
        }
        Ok(())
    }

    /// The `δ` sequence follows the doubling/halving rule exactly.
    pub fn delta_recurrence(run: &RunResult, eta: f64, delta0: f64) -> Result<(), String> {
        let mut delta = delta0;
        for it in &run.iterations {
            if it.delta != delta {
                return Err(format!("iteration {}: δ = {} but replay gives {}", it.k, it.delta, delta));
            }
            let next = if it.stencil_failure.is_some() {
                delta / 2.0
            } else {
                update_delta(delta, it.gg_norm, it.decrease_flag, eta)
            };
            if it.delta_next != next {
                return Err(format!("iteration {}: δ_next = {} but rule gives {}", it.k, it.delta_next, next));
            }
            let ratio = it.delta_next / it.delta;
            if ratio != 2.0 && ratio != 0.5 {
                return Err(format!("iteration {}: δ ratio {}", it.k, ratio));
            }
            delta = next;
        }
        Ok(())
    }

    /// Every basis contains `gg` and is orthonormal.
    pub fn subspace_quality(run: &RunResult) -> Result<(), String> {
        for it in &run.iterations {
            if it.basis_membership > 1e-10 {
                return Err(format!("iteration {}: gg off the subspace by {}", it.k, it.basis_membership));
            }
            if it.basis_orthonormality > 1e-10 {
                return Err(format!("iteration {}: orthonormality error {}", it.k, it.basis_orthonormality));
            }
        }
        Ok(())
    }

    /// Logged stencil, inner and safeguard evaluations add up to the
    /// oracle's count. A run that stopped before its first stencil may
    /// hold one center evaluation outside any iteration.
    pub fn evaluation_accounting(run: &RunResult) -> Result<(), String> {
        let logged: usize = run.iterations.iter().map(IterationLog::evals).sum();
        let unlogged_center = usize::from(run.iterations.is_empty() && run.evals > 0);
        if logged + unlogged_center != run.evals {
            return Err(format!("logged {} evaluations, oracle counted {}", logged, run.evals));
        }
        Ok(())
    }

    pub fn all(run: &RunResult, eta: f64, delta0: f64) -> Result<(), String> {
        monotone(run)?;
        sufficient_decrease(run, eta)?;
        delta_recurrence(run, eta, delta0)?;
        subspace_quality(run)?;
        evaluation_accounting(run)
    }
}
