//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use subdfo::bench::{convergence_eval_count, cost_table, performance_profile, RunRecord};
use subdfo::driver::{audit, minimize, SolverOptions, TheoryProbe};
use subdfo::gradient::{default_tau, estimate_gradient, stencil_step};
use subdfo::linalg::{norm, sub};
use subdfo::oracle::{make_problem, EvaluationOracle, ProblemSpec, TracePoint};
use subdfo::subspace::SubspaceKind;

const MATRIX_PROBLEMS: [&str; 12] = [
    "arwhead", "brybnd", "chrosen", "diagquad", "eg2", "engval1", "liarwhd", "nondia", "power",
    "rosenbrock", "sparsqur", "sphere",
];
const MATRIX_N: usize = 50;
const MATRIX_BUDGET: Duration = Duration::from_secs(120);

const PROBE_MIN_ITERATIONS: usize = 200;
const PROBE_MAX_EVALS: usize = 1_000_000;
const PROBE_START_RADIUS: f64 = 10.0;

const GRADIENT_SLACK: f64 = 1e-8;
const GRADIENT_INSTANCES: usize = 100;

const TABLE3_N: usize = 100;
const TABLE3_BUDGET: Duration = Duration::from_secs(300);
const REGRESSION_FACTOR: f64 = 1.5;
/// (problem, target as a fraction of f0 or absolute, absolute?, baseline
/// evaluations to reach the target).
const TABLE3_TARGETS: [(&str, f64, bool, usize); 3] = [
    ("arwhead", 1e-1, true, 103),
    ("chrosen", 1e-1, false, 107),
    ("liarwhd", 1e-4, false, 370),
];

const STRETCH_N: usize = 10_000;
const STRETCH_TARGET: f64 = 1e-2;
const STRETCH_MAX_EVALS: usize = 3 * 90_331;
const STRETCH_BUDGET: Duration = Duration::from_secs(1800);

const PROFILE_INSTANCES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_matrix_invariants() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut failures = Vec::new();
    for name in MATRIX_PROBLEMS {
        let problem = make_problem(name, MATRIX_N).unwrap();
        for kind in [SubspaceKind::Cg, SubspaceKind::Lmqn] {
            for digits in [None, Some(3)] {
                let options = SolverOptions { subspace: kind, truncation_digits: digits, ..Default::default() };
                let (eta, delta0) = (options.eta, options.delta0);
                let run = minimize(&problem, options).unwrap();
                runs += 1;
                if let Err(e) = audit::all(&run, eta, delta0) {
                    failures.push(format!("{name}/{kind}/{digits:?}: {e}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed <= MATRIX_BUDGET;
    outcome(
        pass,
        format!(
            "{runs} runs, {} audit failures, {:.1}s (limit {}s){}",
            failures.len(),
            elapsed.as_secs_f64(),
            MATRIX_BUDGET.as_secs(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

/// Pools iterations from the standard start and seeded random starts
/// until at least `PROBE_MIN_ITERATIONS` are logged.
fn criterion_small_delta_implication() -> Outcome {
    let n = 10;
    let base = make_problem("diagquad", n).unwrap();
    let l = base.lipschitz.unwrap();
    assert_eq!(l, 10.0);
    let options = SolverOptions {
        max_evals: Some(PROBE_MAX_EVALS),
        record_iterates: true,
        ..Default::default()
    };
    let probe = TheoryProbe::new(l, default_tau(n), n, options.eta);
    let mut rng = StdRng::seed_from_u64(2);
    let (mut runs, mut iterations, mut applicable, mut violations) = (0, 0, 0, 0);
    while iterations < PROBE_MIN_ITERATIONS {
        let mut problem = base.clone();
        if runs > 0 {
            problem.x0 = (0..n).map(|_| rng.random_range(-PROBE_START_RADIUS..PROBE_START_RADIUS)).collect();
        }
        let run = minimize(&problem, options.clone()).unwrap();
        runs += 1;
        iterations += run.iterations.len();
        for it in &run.iterations {
            let g = problem.gradient(it.x_k.as_ref().unwrap()).unwrap();
            if it.delta <= probe.mu * norm(&g) {
                applicable += 1;
                if !(it.decrease_flag && it.gg_norm >= options.eta * it.delta) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{iterations} iterations over {runs} runs, mu = {:.4e}, {applicable} with delta <= mu |g|, {violations} violations",
            probe.mu
        ),
    )
}

/// `½ xᵀ A x + bᵀ x` with `A = (I - 2vvᵀ) diag(λ) (I - 2vvᵀ)`, so
/// `L = max |λ|` exactly.
fn random_quadratic(rng: &mut StdRng, n: usize) -> (ProblemSpec, f64) {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|c| *c /= nv);
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let qi = |k: usize| f64::from(u8::from(i == k)) - 2.0 * v[i] * v[k];
            let qj = |k: usize| f64::from(u8::from(j == k)) - 2.0 * v[j] * v[k];
            a[i][j] = (0..n).map(|k| qi(k) * lambda[k] * qj(k)).sum();
        }
    }
    let l = lambda.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let x0 = vec![0.0; n];
    let spec = ProblemSpec::new("quadratic", x0, move |x: &[f64]| {
        let mut f = 0.0;
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i][j] * x[j]).sum();
            f += 0.5 * x[i] * ax + b[i] * x[i];
        }
        f
    });
    (spec, l)
}

fn exact_quadratic_gradient(spec: &ProblemSpec, x: &[f64]) -> Vec<f64> {
    // Exact for quadratics: central difference with a unit step has no
    // truncation error, only roundoff far below the tested bound.
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += 1.0;
            m[i] -= 1.0;
            (spec.eval(&p) - spec.eval(&m)) / 2.0
        })
        .collect()
}

fn criterion_gradient_bound() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20_240_915);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for i in 0..GRADIENT_INSTANCES {
        let n = [2, 10, 50][i % 3];
        let (spec, l) = random_quadratic(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let delta = 10f64.powf(rng.random_range(-3.0..0.0));
        let tau = default_tau(n);
        let h = stencil_step(&x, delta, tau);
        assert_eq!(h, tau * delta);
        let oracle = EvaluationOracle::new(spec.clone());
        let mut values = vec![oracle.evaluate(&x).unwrap()];
        values.extend(oracle.evaluate_stencil(&x, h, false).into_iter().map(Result::unwrap));
        let gg = estimate_gradient(&values, h).unwrap().gg;
        let g = exact_quadratic_gradient(&spec, &x);
        let bound = tau * (n as f64).sqrt() * l * delta / 2.0;
        let err = norm(&sub(&gg, &g));
        worst = worst.max(err / bound);
        if err > bound * (1.0 + GRADIENT_SLACK) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{GRADIENT_INSTANCES} instances, {violations} violations, worst error/bound = {worst:.4}"),
    )
}

/// Evaluations needed to reach the target, from a trace.
fn first_eval_at_or_below(trace: &[TracePoint], target: f64) -> Option<usize> {
    trace.iter().find(|t| t.best <= target).map(|t| t.eval)
}

fn criterion_table3_scaled() -> Outcome {
    let start = Instant::now();
    let budget = 500 * (TABLE3_N + 1);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, target, absolute, baseline) in TABLE3_TARGETS {
        let problem = make_problem(name, TABLE3_N).unwrap();
        let run = minimize(&problem, SolverOptions { truncation_digits: Some(3), ..Default::default() }).unwrap();
        let threshold = if absolute { target } else { target * run.f0 };
        let reached = first_eval_at_or_below(&run.trace, threshold);
        let within_budget = reached.is_some_and(|e| e <= budget);
        let regression = match reached {
            Some(e) if baseline > 0 => {
                let ratio = e as f64 / baseline as f64;
                (1.0 / REGRESSION_FACTOR..=REGRESSION_FACTOR).contains(&ratio)
            }
            _ => false,
        };
        pass &= within_budget && regression;
        parts.push(format!(
            "{name}: f0 = {:e}, target {threshold:e} at eval {} (baseline {baseline})",
            run.f0,
            reached.map_or_else(|| "never".into(), |e| e.to_string())
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= TABLE3_BUDGET;
    outcome(pass, format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn criterion_stretch() -> Outcome {
    let start = Instant::now();
    let problem = make_problem("arwhead", STRETCH_N).unwrap();
    let options = SolverOptions {
        subspace: SubspaceKind::Lmqn,
        truncation_digits: Some(3),
        max_evals: Some(STRETCH_MAX_EVALS),
        ..Default::default()
    };
    let run = minimize(&problem, options).unwrap();
    let reached = first_eval_at_or_below(&run.trace, STRETCH_TARGET);
    let elapsed = start.elapsed();
    outcome(
        reached.is_some() && elapsed <= STRETCH_BUDGET,
        format!(
            "arwhead n = {STRETCH_N}: f0 = {:e}, f <= {STRETCH_TARGET:e} at eval {} (limit {STRETCH_MAX_EVALS}), f_fin = {:e}, {:.1}s",
            run.f0,
            reached.map_or_else(|| "never".into(), |e| e.to_string()),
            run.f,
            elapsed.as_secs_f64()
        ),
    )
}

fn random_records(rng: &mut StdRng) -> Vec<RunRecord> {
    let solvers = rng.random_range(2..=4);
    let problems = rng.random_range(1..=6);
    let mut records = Vec::new();
    for s in 0..solvers {
        for p in 0..problems {
            let f0 = 100.0;
            let len = rng.random_range(0..30);
            let mut best: f64 = f0;
            let mut eval = 0;
            let mut trace = Vec::new();
            for _ in 0..len {
                eval += rng.random_range(1..20);
                if rng.random_bool(0.6) {
                    best = (best - rng.random_range(0.0..30.0_f64)).max(0.0);
                }
                trace.push(TracePoint { eval, best });
            }
            records.push(RunRecord {
                solver_id: format!("s{s}"),
                problem_id: format!("p{p}"),
                n: 10,
                f0,
                trace,
                status: "budget_exhausted".into(),
            });
        }
    }
    records
}

/// Direct enumeration: per problem reference value, per record first
/// converged evaluation, per breakpoint a count over problems.
fn brute_force_profile(records: &[RunRecord], tol: f64) -> Vec<(String, Vec<(f64, f64)>)> {
    let solvers: BTreeSet<String> = records.iter().map(|r| r.solver_id.clone()).collect();
    let problems: BTreeSet<String> = records.iter().map(|r| r.problem_id.clone()).collect();
    let find = |s: &str, p: &str| records.iter().find(|r| r.solver_id == s && r.problem_id == p).unwrap();
    let mut nf = Vec::new();
    for s in &solvers {
        let mut row = Vec::new();
        for p in &problems {
            let mut f_best = f64::INFINITY;
            for r in records.iter().filter(|r| &r.problem_id == p) {
                for t in &r.trace {
                    if t.best < f_best {
                        f_best = t.best;
                    }
                }
            }
            let r = find(s, p);
            let value = if r.f0 == f_best {
                Some(1)
            } else {
                let threshold = f_best + tol * (r.f0 - f_best);
                let mut hit = None;
                for t in &r.trace {
                    if t.best <= threshold {
                        hit = Some(t.eval);
                        break;
                    }
                }
                hit
            };
            row.push(value);
        }
        nf.push(row);
    }
    let mut ratio = vec![vec![f64::INFINITY; problems.len()]; solvers.len()];
    for p in 0..problems.len() {
        let mut min: Option<usize> = None;
        for row in &nf {
            if let Some(v) = row[p] {
                min = Some(min.map_or(v, |m| m.min(v)));
            }
        }
        for s in 0..solvers.len() {
            if let (Some(v), Some(m)) = (nf[s][p], min) {
                ratio[s][p] = (v as f64 / m as f64).log2();
            }
        }
    }
    let mut breaks = vec![0.0];
    for row in &ratio {
        for &r in row {
            if r.is_finite() && !breaks.contains(&r) {
                breaks.push(r);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    solvers
        .iter()
        .enumerate()
        .map(|(s, id)| {
            let pts = breaks
                .iter()
                .map(|&t| {
                    let count = ratio[s].iter().filter(|&&r| r <= t).count();
                    (t, count as f64 / problems.len() as f64)
                })
                .collect();
            (id.clone(), pts)
        })
        .collect()
}

fn criterion_profile_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..PROFILE_INSTANCES {
        let records = random_records(&mut rng);
        let tol = [1e-1, 1e-3, 0.5][rng.random_range(0..3)];
        let table = cost_table(&records, tol, &|_, _| None).unwrap();
        let curves = performance_profile(&table).unwrap();
        let got: Vec<(String, Vec<(f64, f64)>)> =
            curves.into_iter().map(|c| (c.solver_id, c.points)).collect();
        if got != brute_force_profile(&records, tol) {
            mismatches += 1;
        }
    }

    let record = |trace: Vec<TracePoint>| RunRecord {
        solver_id: "a".into(),
        problem_id: "p".into(),
        n: 1,
        f0: 100.0,
        trace,
        status: "budget_exhausted".into(),
    };
    let mut reaching = vec![TracePoint { eval: 1, best: 100.0 }, TracePoint { eval: 20, best: 50.0 }];
    reaching.push(TracePoint { eval: 37, best: 10.0 });
    reaching.push(TracePoint { eval: 60, best: 1.0 });
    let examples = [
        convergence_eval_count(&record(reaching), 0.0, 0.1) == Some(37),
        convergence_eval_count(&record(vec![TracePoint { eval: 5, best: 10.5 }]), 0.0, 0.1).is_none(),
        convergence_eval_count(&record(vec![TracePoint { eval: 9, best: 100.0 }]), 0.0, 0.3).is_none(),
    ];
    let examples_ok = examples.iter().filter(|&&e| e).count();
    outcome(
        mismatches == 0 && examples_ok == examples.len(),
        format!("{PROFILE_INSTANCES} random record sets, {mismatches} mismatches; {examples_ok}/3 convergence examples"),
    )
}

fn criterion_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_subdfo");
    let base = std::env::temp_dir().join(format!("subdfo-accept-det-{}", std::process::id()));
    let mut traces = Vec::new();
    for run in 0..2 {
        let dir = base.join(run.to_string());
        let status = Command::new(bin)
            .args(["run", "--problem", "chrosen", "--n", "50", "--seed", "7", "--out"])
            .arg(&dir)
            .output()
            .expect("spawn subdfo");
        if !status.status.success() {
            return outcome(false, format!("run {run} exited with {}", status.status));
        }
        let trace = std::fs::read(dir.join("trace.csv")).unwrap();
        let iterations = std::fs::read(dir.join("iterations.csv")).unwrap();
        // The summary lines, without the `wrote <path>` lines that name the
        // per-run directory.
        let summary: Vec<String> = String::from_utf8(status.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wrote "))
            .map(str::to_owned)
            .collect();
        traces.push((trace, iterations, summary));
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = traces[0] == traces[1];
    outcome(
        same,
        format!(
            "trace.csv {} bytes, iterations.csv {} bytes, {}",
            traces[0].0.len(),
            traces[0].1.len(),
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 invariant suite on the 12-problem matrix", criterion_matrix_invariants),
        ("2 small-delta implication on diag(1..10)", criterion_small_delta_implication),
        ("3 forward-difference gradient bound", criterion_gradient_bound),
        ("4 scaled arwhead/chrosen/liarwhd at n = 100", criterion_table3_scaled),
        ("5 arwhead at n = 10^4 (slow)", criterion_stretch),
        ("6 profile oracle and convergence test", criterion_profile_oracle),
        ("7 seeded run determinism", criterion_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let Outcome { pass, detail } = check();
        println!("{} criterion {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
