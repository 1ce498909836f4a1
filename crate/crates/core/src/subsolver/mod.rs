//! Approximate minimization over `x_k + S_k` followed by the safeguard
//! acceptance rule.
//!
//! The inner solver may return any point; the sufficient-decrease
//! guarantee comes from [`safeguard_accept`], which falls back to the
//! normalized steepest-descent point `x_k - δ gg/‖gg‖` whenever the
//! subspace point misses the `η δ²` target.

mod nelder_mead;
mod quadratic_model;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::linalg::{axpy, norm};
use crate::oracle::{EvalError, EvaluationOracle};
use crate::subspace::SubspaceBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerMethod {
    NelderMead,
    /// Separable quadratic interpolation on `2p + 1` points. Experimental.
    QuadraticModel,
}

impl InnerMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            InnerMethod::NelderMead => "nelder-mead",
            InnerMethod::QuadraticModel => "quadratic-model",
        }
    }
}

impl fmt::Display for InnerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InnerMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nelder-mead" => Ok(InnerMethod::NelderMead),
            "quadratic-model" => Ok(InnerMethod::QuadraticModel),
            other => Err(format!(
                "unknown inner method `{other}` (expected nelder-mead or quadratic-model)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InnerSolverSpec {
    pub method: InnerMethod,
    /// Maximum inner evaluations; `None` means `10 (p + 1)`. `Some(0)`
    /// disables the inner solver so only the safeguard point is tried.
    pub budget: Option<usize>,
    /// Initial simplex edge (or model radius) as a multiple of `δ_k`.
    pub initial_scale: f64,
}

impl Default for InnerSolverSpec {
    fn default() -> Self {
        Self {
            method: InnerMethod::NelderMead,
            budget: None,
            initial_scale: 1.0,
        }
    }
}

impl InnerSolverSpec {
    pub fn budget_for(&self, p: usize) -> usize {
        self.budget.unwrap_or(10 * (p + 1))
    }
}

/// Reduced objective `α ↦ f(center + B α)` with its own evaluation budget.
pub(crate) struct ReducedEval<'a> {
    oracle: &'a EvaluationOracle,
    center: &'a [f64],
    basis: &'a SubspaceBasis,
    budget: usize,
    used: usize,
    exhausted: bool,
}

impl ReducedEval<'_> {
    /// `None` once the inner or global budget is spent; failed evaluations
    /// come back as `+inf`.
    pub(crate) fn call(&mut self, alpha: &[f64]) -> Option<f64> {
        if self.exhausted || self.used >= self.budget {
            return None;
        }
        let x = self.basis.point(self.center, alpha);
        match self.oracle.evaluate(&x) {
            Ok(v) => {
                self.used += 1;
                Some(v)
            }
            Err(EvalError::Failed { .. }) => {
                self.used += 1;
                Some(f64::INFINITY)
            }
            Err(_) => {
                self.exhausted = true;
                None
            }
        }
    }
}

/// Result of the inner solve: the best point found and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSolution {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Approximately minimizes `f` over `x_center + span(basis)` starting at
/// `α = 0`, where `f(x_center) = f_center` is already known.
///
/// At most `min(spec.budget_for(p), budget_cap)` evaluations are spent.
/// The result is never worse than the center and lies exactly on
/// `x_center + B α`.
#[allow(clippy::too_many_arguments)]
pub fn solve_subspace<R: Rng + ?Sized>(
    oracle: &EvaluationOracle,
    x_center: &[f64],
    f_center: f64,
    basis: &SubspaceBasis,
    spec: &InnerSolverSpec,
    delta: f64,
    budget_cap: usize,
    rng: &mut R,
) -> SubspaceSolution {
    let p = basis.dim();
    let budget = spec.budget_for(p).min(budget_cap);
    if p == 0 || budget == 0 {
        return SubspaceSolution {
            x: x_center.to_vec(),
            f: f_center,
            evals: 0,
        };
    }
    let mut eval = ReducedEval {
        oracle,
        center: x_center,
        basis,
        budget,
        used: 0,
        exhausted: false,
    };
    let scale = spec.initial_scale * delta;
    let (alpha, f) = match spec.method {
        InnerMethod::NelderMead => nelder_mead::minimize(&mut eval, p, f_center, scale, rng),
        InnerMethod::QuadraticModel => quadratic_model::minimize(&mut eval, p, f_center, scale),
    };
    let (x, f) = if f < f_center {
        (basis.point(x_center, &alpha), f)
    } else if alpha.iter().all(|a| *a == 0.0) || f > f_center {
        (x_center.to_vec(), f_center)
    } else {
        // A tie away from the center: keep the explored point.
        (basis.point(x_center, &alpha), f)
    };
    SubspaceSolution {
        x,
        f,
        evals: eval.used,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptedVia {
    Subspace,
    Safeguard,
    Stay,
}

impl AcceptedVia {
    pub fn as_str(&self) -> &'static str {
        match self {
            AcceptedVia::Subspace => "subspace",
            AcceptedVia::Safeguard => "safeguard",
            AcceptedVia::Stay => "stay",
        }
    }
}

/// What happened to the safeguard point `x_k - δ gg/‖gg‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Safeguard {
    /// The subspace point already achieved sufficient decrease.
    NotNeeded,
    /// `gg = 0`: the safeguard point is `x_k` itself, no evaluation.
    Degenerate,
    Evaluated { f: f64 },
    /// The evaluation budget ran out before it could be evaluated.
    Unavailable,
}

impl Safeguard {
    pub fn evaluated(&self) -> bool {
        matches!(self, Safeguard::Evaluated { .. })
    }

    /// Value entering the right-hand side of the sufficient-decrease
    /// bound; `+inf` when unavailable.
    pub fn bound_value(&self, f_k: f64) -> Option<f64> {
        match *self {
            Safeguard::NotNeeded => None,
            Safeguard::Degenerate => Some(f_k),
            Safeguard::Evaluated { f } => Some(f),
            Safeguard::Unavailable => Some(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x_next: Vec<f64>,
    pub f_next: f64,
    pub accepted_via: AcceptedVia,
    /// `f_next ≤ f_k - η δ²`
    pub decrease_flag: bool,
    /// Inner-solver evaluations plus one if the safeguard was evaluated.
    pub evals_used: usize,
    pub inner_evals: usize,
    pub safeguard: Safeguard,
}

/// `x_k - δ gg/‖gg‖`, or `x_k` when `gg = 0`.
pub fn safeguard_point(x_k: &[f64], gg: &[f64], delta: f64) -> Vec<f64> {
    let mut x = x_k.to_vec();
    let g = norm(gg);
    if g > 0.0 {
        axpy(-delta / g, gg, &mut x);
    }
    x
}

/// `f_next ≤ max{f_k - η δ², f_g}`, the bound every accepted step must meet.
pub fn satisfies_sufficient_decrease(f_k: f64, f_next: f64, f_g: f64, eta: f64, delta: f64) -> bool {
    f_next <= (f_k - eta * delta * delta).max(f_g)
}

/// Accepts the subspace point if it achieves `f_s ≤ f_k - η δ²`; otherwise
/// evaluates the safeguard point and takes the best of
/// `{x_g, x_s, x_k}`, preferring them in that order on ties.
pub fn safeguard_accept(
    oracle: &EvaluationOracle,
    x_k: &[f64],
    f_k: f64,
    gg: &[f64],
    solution: SubspaceSolution,
    eta: f64,
    delta: f64,
) -> StepOutcome {
    let target = f_k - eta * delta * delta;
    let inner_evals = solution.evals;
    let f_s = if solution.f.is_nan() {
        f64::INFINITY
    } else {
        solution.f
    };
    if f_s <= target {
        return StepOutcome {
            x_next: solution.x,
            f_next: f_s,
            accepted_via: AcceptedVia::Subspace,
            decrease_flag: true,
            evals_used: inner_evals,
            inner_evals,
            safeguard: Safeguard::NotNeeded,
        };
    }

    let (safeguard, x_g) = if norm(gg) == 0.0 {
        (Safeguard::Degenerate, None)
    } else {
        let x_g = safeguard_point(x_k, gg, delta);
        match oracle.evaluate(&x_g) {
            Ok(f) => (Safeguard::Evaluated { f }, Some(x_g)),
            Err(EvalError::Failed { .. }) => (
                Safeguard::Evaluated {
                    f: f64::INFINITY,
                },
                Some(x_g),
            ),
            Err(_) => (Safeguard::Unavailable, None),
        }
    };
    let evals_used = inner_evals + usize::from(safeguard.evaluated());

    let (x_next, f_next, accepted_via) = match (safeguard, x_g) {
        (Safeguard::Evaluated { f: f_g }, Some(x_g)) if f_g <= f_s && f_g <= f_k => {
            (x_g, f_g, AcceptedVia::Safeguard)
        }
        _ if f_s <= f_k => (solution.x, f_s, AcceptedVia::Subspace),
        _ => (x_k.to_vec(), f_k, AcceptedVia::Stay),
    };
    StepOutcome {
        decrease_flag: f_next <= target,
        x_next,
        f_next,
        accepted_via,
        evals_used,
        inner_evals,
        safeguard,
    }
}
