//! Objectives, the counting/truncating evaluation wrapper, and the native
//! problem catalog.
//!
//! The solver never calls an objective directly. Every value it sees comes
//! through [`EvaluationOracle::evaluate`] (or the batched stencil variant),
//! which counts the call, optionally chops the value to a fixed number of
//! significant decimal digits, and extends the best-so-far trace.

mod catalog;

use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use rayon::prelude::*;
use thiserror::Error;

pub use catalog::{catalog, make_problem, CatalogEntry, CatalogError};

/// Objective map `R^n -> R`.
pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Analytic gradient map `R^n -> R^n`, used only by tests and probes.
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A named objective together with its standard start and optional
/// analytic data used by test oracles.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub objective: Objective,
    pub x0: Vec<f64>,
    pub analytic_gradient: Option<GradientFn>,
    /// Lipschitz constant of the gradient, when known.
    pub lipschitz: Option<f64>,
    /// Known best value, used as a reference in convergence tests.
    pub f_lower: Option<f64>,
}

impl ProblemSpec {
    pub fn new<F>(name: impl Into<String>, x0: Vec<f64>, objective: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            n: x0.len(),
            objective: Arc::new(objective),
            x0,
            analytic_gradient: None,
            lipschitz: None,
            f_lower: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.analytic_gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_f_lower(mut self, f: f64) -> Self {
        self.f_lower = Some(f);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.analytic_gradient.as_ref().map(|g| g(x))
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("has_gradient", &self.analytic_gradient.is_some())
            .field("lipschitz", &self.lipschitz)
            .field("f_lower", &self.f_lower)
            .finish()
    }
}

/// Chops `v` to its first `digits` significant decimal digits, toward zero.
///
/// The decimal digits are those of the shortest representation that
/// round-trips to `v`, so `0.3` chops to `0.3` rather than `0.299`.
/// Zero and non-finite values are returned unchanged.
pub fn truncate_value(v: f64, digits: u32) -> f64 {
    assert!(digits >= 1, "truncation needs at least one significant digit");
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let repr = format!("{:e}", v.abs());
    let (mantissa, exponent) = repr
        .split_once('e')
        .expect("scientific formatting always has an exponent");
    let significant: String = mantissa.chars().filter(|c| *c != '.').collect();
    let d = digits as usize;
    if significant.len() <= d {
        return v;
    }
    let kept = &significant[..d];
    let chopped: f64 = format!("{}.{}e{}", &kept[..1], &kept[1..], exponent)
        .parse()
        .expect("chopped decimal string is a valid float");
    chopped.copysign(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("point has dimension {got}, problem expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    /// The objective returned a non-finite value (or the point was not
    /// finite). The evaluation is counted.
    #[error("evaluation {eval} failed: non-finite value")]
    Failed { eval: usize },
    #[error("evaluation budget of {max} exhausted")]
    BudgetExhausted { max: usize },
}

impl EvalError {
    /// Whether the failed call consumed an evaluation.
    pub fn is_counted(&self) -> bool {
        matches!(self, EvalError::Failed { .. })
    }
}

/// Folds an evaluation result into the value used by acceptance logic:
/// failures become `+inf`.
pub fn value_or_inf(r: Result<f64, EvalError>) -> f64 {
    r.unwrap_or(f64::INFINITY)
}

/// One entry of the per-evaluation best-so-far trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// 1-based evaluation index.
    pub eval: usize,
    /// Best (possibly truncated) value seen up to and including `eval`.
    pub best: f64,
}

#[derive(Debug, Default)]
struct EvalLog {
    count: usize,
    best_f: Option<f64>,
    best_x: Option<Vec<f64>>,
    trace: Vec<TracePoint>,
    failures: Vec<usize>,
}

impl EvalLog {
    /// Records one counted evaluation; returns its index and whether it
    /// improved the best value.
    fn push(&mut self, value: Option<f64>) -> (usize, bool) {
        self.count += 1;
        let eval = self.count;
        let improved = match value {
            Some(v) => match self.best_f {
                Some(b) if b <= v => false,
                _ => {
                    self.best_f = Some(v);
                    true
                }
            },
            None => {
                self.failures.push(eval);
                false
            }
        };
        let best = self.best_f.unwrap_or(f64::INFINITY);
        self.trace.push(TracePoint { eval, best });
        (eval, improved)
    }
}

/// Counting, optionally truncating wrapper around a [`ProblemSpec`].
///
/// Safe to share across threads: the count increment and the trace entry of
/// one evaluation happen under a single lock.
pub struct EvaluationOracle {
    problem: ProblemSpec,
    truncation_digits: Option<u32>,
    max_evals: Option<usize>,
    log: Mutex<EvalLog>,
}

impl EvaluationOracle {
    pub fn new(problem: ProblemSpec) -> Self {
        Self {
            problem,
            truncation_digits: None,
            max_evals: None,
            log: Mutex::new(EvalLog::default()),
        }
    }

    pub fn with_truncation(mut self, digits: Option<u32>) -> Self {
        if let Some(d) = digits {
            assert!(d >= 1, "truncation digits must be positive");
        }
        self.truncation_digits = digits;
        self
    }

    pub fn with_max_evals(mut self, max: Option<usize>) -> Self {
        self.max_evals = max;
        self
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn n(&self) -> usize {
        self.problem.n
    }

    pub fn truncation_digits(&self) -> Option<u32> {
        self.truncation_digits
    }

    pub fn max_evals(&self) -> Option<usize> {
        self.max_evals
    }

    fn lock(&self) -> MutexGuard<'_, EvalLog> {
        self.log.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn eval_count(&self) -> usize {
        self.lock().count
    }

    /// Evaluations left before the budget is hit (`usize::MAX` if unbounded).
    pub fn remaining(&self) -> usize {
        match self.max_evals {
            Some(m) => m.saturating_sub(self.eval_count()),
            None => usize::MAX,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn best_value(&self) -> Option<f64> {
        self.lock().best_f
    }

    pub fn best_point(&self) -> Option<Vec<f64>> {
        self.lock().best_x.clone()
    }

    pub fn trace(&self) -> Vec<TracePoint> {
        self.lock().trace.clone()
    }

    /// 1-based indices of evaluations that returned a non-finite value.
    pub fn failures(&self) -> Vec<usize> {
        self.lock().failures.clone()
    }

    fn raw_value(&self, x: &[f64]) -> Option<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let raw = self.problem.eval(x);
        if !raw.is_finite() {
            return None;
        }
        Some(match self.truncation_digits {
            Some(d) => truncate_value(raw, d),
            None => raw,
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.problem.n {
            return Err(EvalError::DimensionMismatch {
                expected: self.problem.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_budget(&self, log: &EvalLog) -> Result<(), EvalError> {
        match self.max_evals {
            Some(max) if log.count >= max => Err(EvalError::BudgetExhausted { max }),
            _ => Ok(()),
        }
    }

    /// Evaluates the objective at `x`, counting the call.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(x)?;
        self.check_budget(&self.lock())?;
        let value = self.raw_value(x);
        let mut log = self.lock();
        self.check_budget(&log)?;
        let (eval, improved) = log.push(value);
        if improved {
            log.best_x = Some(x.to_vec());
        }
        value.ok_or(EvalError::Failed { eval })
    }

    /// Evaluates the forward-difference stencil points `center + step * e_i`
    /// for `i = 0..n`, in parallel when `parallel` is set.
    ///
    /// Objective calls may run concurrently; results are recorded in index
    /// order, so the trace does not depend on scheduling. Points beyond the
    /// remaining budget come back as `BudgetExhausted`.
    pub fn evaluate_stencil(
        &self,
        center: &[f64],
        step: f64,
        parallel: bool,
    ) -> Vec<Result<f64, EvalError>> {
        let n = self.problem.n;
        if let Err(e) = self.check_dim(center) {
            return vec![Err(e); n];
        }
        let point_value = |i: usize, scratch: &mut Vec<f64>| {
            let saved = scratch[i];
            scratch[i] = saved + step;
            let v = self.raw_value(scratch);
            scratch[i] = saved;
            v
        };
        let budget = self.remaining().min(n);
        let values: Vec<Option<f64>> = if parallel && budget >= 2 {
            (0..budget)
                .into_par_iter()
                .map_init(|| center.to_vec(), |scratch, i| point_value(i, scratch))
                .collect()
        } else {
            let mut scratch = center.to_vec();
            (0..budget).map(|i| point_value(i, &mut scratch)).collect()
        };

        let mut log = self.lock();
        let mut best_index = None;
        let mut out = Vec::with_capacity(n);
        for (i, value) in values.into_iter().enumerate() {
            if let Err(e) = self.check_budget(&log) {
                out.push(Err(e));
                continue;
            }
            let (eval, improved) = log.push(value);
            if improved {
                best_index = Some(i);
            }
            out.push(value.ok_or(EvalError::Failed { eval }));
        }
        if let Some(i) = best_index {
            let mut x = center.to_vec();
            x[i] += step;
            log.best_x = Some(x);
        }
        let max = self.max_evals.unwrap_or(usize::MAX);
        out.resize(n, Err(EvalError::BudgetExhausted { max }));
        out
    }
}

impl fmt::Debug for EvaluationOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvaluationOracle")
            .field("problem", &self.problem.name)
            .field("truncation_digits", &self.truncation_digits)
            .field("max_evals", &self.max_evals)
            .field("eval_count", &self.eval_count())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent route: chop via exponent arithmetic on the decimal
    /// magnitude, checked only on values whose digits are exact in binary
    /// after scaling.
    fn chop_by_exponent(v: f64, d: u32) -> f64 {
        let e = v.abs().log10().floor() as i32;
        let unit = 10f64.powi(e - d as i32 + 1);
        (v / unit).trunc() * unit
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_value(29997.0, 3), 29900.0);
        assert_eq!(truncate_value(0.0, 3), 0.0);
        assert_eq!(truncate_value(-9.9994e3, 3), -9.99e3);
        assert_eq!(truncate_value(0.3, 3), 0.3);
        assert_eq!(truncate_value(1.23456e-7, 2), 1.2e-7);
        assert_eq!(truncate_value(f64::INFINITY, 3), f64::INFINITY);
    }

    #[test]
    fn truncation_matches_exponent_chop_on_integers() {
        for v in [29997.0, 199980.0, 5850000.0, 47980000.0, -8414.0, 12345.0] {
            assert_eq!(truncate_value(v, 3), chop_by_exponent(v, 3), "v = {v}");
        }
    }

    proptest! {
        #[test]
        fn truncation_idempotent(v in -1e12f64..1e12, d in 1u32..=8) {
            let t = truncate_value(v, d);
            prop_assert_eq!(truncate_value(t, d), t);
        }

        #[test]
        fn truncation_error_bound(v in prop::num::f64::NORMAL, d in 1u32..=8) {
            let t = truncate_value(v, d);
            prop_assert!((t - v).abs() <= 10f64.powi(1 - d as i32) * v.abs());
            prop_assert!(t.abs() <= v.abs());
            prop_assert_eq!(t.signum(), v.signum());
        }
    }

    fn sphere(n: usize) -> ProblemSpec {
        ProblemSpec::new("sphere", vec![1.0; n], |x| x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn counts_and_traces_every_evaluation() {
        let oracle = EvaluationOracle::new(sphere(2));
        assert_eq!(oracle.evaluate(&[1.0, 1.0]), Ok(2.0));
        assert_eq!(oracle.evaluate(&[2.0, 0.0]), Ok(4.0));
        assert_eq!(oracle.evaluate(&[0.5, 0.0]), Ok(0.25));
        assert_eq!(oracle.eval_count(), 3);
        let bests: Vec<f64> = oracle.trace().iter().map(|t| t.best).collect();
        assert_eq!(bests, vec![2.0, 2.0, 0.25]);
        assert_eq!(oracle.best_point(), Some(vec![0.5, 0.0]));
    }

    #[test]
    fn failures_are_counted_and_recorded_distinctly() {
        let p = ProblemSpec::new("bad", vec![0.0], |x| if x[0] > 0.0 { f64::NAN } else { 1.0 });
        let oracle = EvaluationOracle::new(p);
        assert_eq!(oracle.evaluate(&[0.0]), Ok(1.0));
        assert_eq!(oracle.evaluate(&[1.0]), Err(EvalError::Failed { eval: 2 }));
        assert_eq!(oracle.eval_count(), 2);
        assert_eq!(oracle.failures(), vec![2]);
        assert_eq!(oracle.trace()[1].best, 1.0);
        assert_eq!(value_or_inf(oracle.evaluate(&[f64::NAN])), f64::INFINITY);
    }

    #[test]
    fn budget_is_enforced() {
        let oracle = EvaluationOracle::new(sphere(1)).with_max_evals(Some(2));
        assert!(oracle.evaluate(&[1.0]).is_ok());
        assert!(oracle.evaluate(&[1.0]).is_ok());
        assert_eq!(
            oracle.evaluate(&[1.0]),
            Err(EvalError::BudgetExhausted { max: 2 })
        );
        assert_eq!(oracle.eval_count(), 2);
    }

    #[test]
    fn dimension_is_checked() {
        let oracle = EvaluationOracle::new(sphere(2));
        assert_eq!(
            oracle.evaluate(&[1.0]),
            Err(EvalError::DimensionMismatch { expected: 2, got: 1 })
        );
        assert_eq!(oracle.eval_count(), 0);
    }

    #[test]
    fn truncating_oracle_returns_chopped_values() {
        let oracle = EvaluationOracle::new(make_problem("arwhead", 10_000).unwrap())
            .with_truncation(Some(3));
        let x0 = oracle.problem().x0.clone();
        assert_eq!(oracle.evaluate(&x0), Ok(29900.0));
        let exact = EvaluationOracle::new(make_problem("arwhead", 100).unwrap());
        assert_eq!(exact.evaluate(&vec![1.0; 100]), Ok(297.0));
    }

    #[test]
    fn stencil_matches_sequential_evaluation() {
        let p = make_problem("chrosen", 20).unwrap();
        let x = p.x0.clone();
        let a = EvaluationOracle::new(p.clone()).with_truncation(Some(3));
        let b = EvaluationOracle::new(p).with_truncation(Some(3));
        let batch = a.evaluate_stencil(&x, 0.1, true);
        let one_by_one: Vec<_> = (0..x.len())
            .map(|i| {
                let mut y = x.clone();
                y[i] += 0.1;
                b.evaluate(&y)
            })
            .collect();
        assert_eq!(batch, one_by_one);
        assert_eq!(a.trace(), b.trace());
        assert_eq!(a.best_point(), b.best_point());
    }

    #[test]
    fn stencil_respects_budget() {
        let oracle = EvaluationOracle::new(sphere(4)).with_max_evals(Some(2));
        let out = oracle.evaluate_stencil(&[0.0; 4], 0.5, false);
        assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 2);
        assert!(matches!(out[3], Err(EvalError::BudgetExhausted { max: 2 })));
        assert_eq!(oracle.eval_count(), 2);
    }

    #[test]
    fn concurrent_evaluations_keep_count_and_trace_consistent() {
        let oracle = EvaluationOracle::new(sphere(3));
        std::thread::scope(|s| {
            for t in 0..4 {
                let oracle = &oracle;
                s.spawn(move || {
                    for i in 0..250 {
                        let v = (t * 250 + i) as f64 / 1000.0;
                        oracle.evaluate(&[v, 0.0, 0.0]).unwrap();
                    }
                });
            }
        });
        assert_eq!(oracle.eval_count(), 1000);
        let trace = oracle.trace();
        assert_eq!(trace.len(), 1000);
        for (i, w) in trace.windows(2).enumerate() {
            assert_eq!(w[0].eval, i + 1);
            assert!(w[1].best <= w[0].best);
        }
        assert_eq!(oracle.best_value(), Some(0.0));
    }
}
