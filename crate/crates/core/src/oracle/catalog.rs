//! Native reimplementations of unconstrained test problems with changeable
//! dimension, using the conventional starting points.
//!
//! Indices in the formulas below are 1-based, as in the usual problem
//! statements; the code is 0-based.

use thiserror::Error;

use super::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown problem `{name}` (run `problems` for the catalog)")]
    UnknownProblem { name: String },
    #[error("invalid dimension n = {n} for `{problem}`: {requirement}")]
    InvalidDimension {
        problem: String,
        n: usize,
        requirement: &'static str,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub formula: &'static str,
    pub start: &'static str,
    pub requirement: &'static str,
    min_n: usize,
    multiple_of: usize,
}

impl CatalogEntry {
    fn accepts(&self, n: usize) -> bool {
        n >= self.min_n && n.is_multiple_of(self.multiple_of)
    }
}

const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "arwhead",
        formula: "sum_{i<n} (x_i^2 + x_n^2)^2 - 4 x_i + 3",
        start: "x_i = 1",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "brybnd",
        formula: "sum_i (x_i (2 + 5 x_i^2) + 1 - sum_{j in J_i} x_j (1 + x_j))^2, J_i = [i-5, i+1] \\ {i}",
        start: "x_i = -1",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "chrosen",
        formula: "sum_{i<n} 4 (x_i - x_{i+1}^2)^2 + (1 - x_{i+1})^2",
        start: "x_i = -1",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "diagquad",
        formula: "1/2 sum_i i x_i^2",
        start: "x_i = 1",
        requirement: "n >= 1",
        min_n: 1,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "eg2",
        formula: "sum_{i<n} sin(x_1 + x_i^2 - 1) + sin(x_n^2) / 2",
        start: "x_i = 0",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "engval1",
        formula: "sum_{i<n} (x_i^2 + x_{i+1}^2)^2 - 4 x_i + 3",
        start: "x_i = 2",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "liarwhd",
        formula: "sum_i 4 (x_i^2 - x_1)^2 + (x_i - 1)^2",
        start: "x_i = 4",
        requirement: "n >= 1",
        min_n: 1,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "nondia",
        formula: "(x_1 - 1)^2 + sum_{i>=2} 100 (x_1 - x_{i-1}^2)^2",
        start: "x_i = -1",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "power",
        formula: "sum_i (i x_i)^2",
        start: "x_i = 1",
        requirement: "n >= 1",
        min_n: 1,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "rosenbrock",
        formula: "sum_{i<n} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2",
        start: "x = (-1.2, 1, -1.2, 1, ...)",
        requirement: "n >= 2",
        min_n: 2,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "sparsqur",
        formula: "sum_i (i/8) (x_i^2 + x_{j2}^2 + x_{j3}^2 + x_{j5}^2 + x_{j7}^2 + x_{j11}^2)^2, jk = mod(k i - 1, n) + 1",
        start: "x_i = 0.5",
        requirement: "n >= 1",
        min_n: 1,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "sphere",
        formula: "sum_i x_i^2",
        start: "x_i = 1",
        requirement: "n >= 1",
        min_n: 1,
        multiple_of: 1,
    },
    CatalogEntry {
        name: "woods",
        formula: "sum over blocks of 4: 100 (x2 - x1^2)^2 + (1 - x1)^2 + 90 (x4 - x3^2)^2 + (1 - x3)^2 + 10 (x2 + x4 - 2)^2 + (x2 - x4)^2 / 10",
        start: "x = (-3, -1, -3, -1, ...)",
        requirement: "n >= 4 and divisible by 4",
        min_n: 4,
        multiple_of: 4,
    },
];

/// All problems addressable by name.
pub fn catalog() -> &'static [CatalogEntry] {
    ENTRIES
}

/// Builds the named problem at dimension `n` with its standard start.
pub fn make_problem(name: &str, n: usize) -> Result<ProblemSpec, CatalogError> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownProblem {
            name: name.to_string(),
        })?;
    if !entry.accepts(n) {
        return Err(CatalogError::InvalidDimension {
            problem: name.to_string(),
            n,
            requirement: entry.requirement,
        });
    }
    Ok(match name {
        "arwhead" => arwhead(n),
        "brybnd" => brybnd(n),
        "chrosen" => chrosen(n),
        "diagquad" => diagquad(n),
        "eg2" => eg2(n),
        "engval1" => engval1(n),
        "liarwhd" => liarwhd(n),
        "nondia" => nondia(n),
        "power" => power(n),
        "rosenbrock" => rosenbrock(n),
        "sparsqur" => sparsqur(n),
        "sphere" => sphere(n),
        "woods" => woods(n),
        _ => unreachable!("catalog entry without constructor: {name}"),
    })
}

fn arwhead(n: usize) -> ProblemSpec {
    ProblemSpec::new("arwhead", vec![1.0; n], |x| {
        let last = x[x.len() - 1] * x[x.len() - 1];
        x[..x.len() - 1]
            .iter()
            .map(|&v| {
                let q = v * v + last;
                q * q - 4.0 * v + 3.0
            })
            .sum()
    })
    .with_gradient(|x| {
        let n = x.len();
        let xn = x[n - 1];
        let mut g = vec![0.0; n];
        for i in 0..n - 1 {
            let q = x[i] * x[i] + xn * xn;
            g[i] = 4.0 * x[i] * q - 4.0;
            g[n - 1] += 4.0 * xn * q;
        }
        g
    })
    .with_f_lower(0.0)
}

fn brybnd_residual(x: &[f64], i: usize) -> f64 {
    let lo = i.saturating_sub(5);
    let hi = (i + 1).min(x.len() - 1);
    let mut r = x[i] * (2.0 + 5.0 * x[i] * x[i]) + 1.0;
    for (j, &xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
        if j != i {
            r -= xj * (1.0 + xj);
        }
    }
    r
}

fn brybnd(n: usize) -> ProblemSpec {
    ProblemSpec::new("brybnd", vec![-1.0; n], |x| {
        (0..x.len())
            .map(|i| brybnd_residual(x, i).powi(2))
            .sum()
    })
    .with_gradient(|x| {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let r2 = 2.0 * brybnd_residual(x, i);
            g[i] += r2 * (2.0 + 15.0 * x[i] * x[i]);
            for j in i.saturating_sub(5)..=(i + 1).min(n - 1) {
                if j != i {
                    g[j] -= r2 * (1.0 + 2.0 * x[j]);
                }
            }
        }
        g
    })
    .with_f_lower(0.0)
}

fn chrosen(n: usize) -> ProblemSpec {
    ProblemSpec::new("chrosen", vec![-1.0; n], |x| {
        x.windows(2)
            .map(|w| {
                let a = w[0] - w[1] * w[1];
                let b = 1.0 - w[1];
                4.0 * a * a + b * b
            })
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let a = x[i] - x[i + 1] * x[i + 1];
            g[i] += 8.0 * a;
            g[i + 1] += -16.0 * a * x[i + 1] - 2.0 * (1.0 - x[i + 1]);
        }
        g
    })
    .with_f_lower(0.0)
}

fn diagquad(n: usize) -> ProblemSpec {
    ProblemSpec::new("diagquad", vec![1.0; n], |x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| 0.5 * (i + 1) as f64 * v * v)
            .sum()
    })
    .with_gradient(|x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * v)
            .collect()
    })
    .with_lipschitz(n as f64)
    .with_f_lower(0.0)
}

fn eg2(n: usize) -> ProblemSpec {
    ProblemSpec::new("eg2", vec![0.0; n], |x| {
        let n = x.len();
        let head: f64 = x[..n - 1]
            .iter()
            .map(|v| (x[0] + v * v - 1.0).sin())
            .sum();
        head + 0.5 * (x[n - 1] * x[n - 1]).sin()
    })
    .with_gradient(|x| {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n - 1 {
            let c = (x[0] + x[i] * x[i] - 1.0).cos();
            g[0] += c;
            g[i] += c * 2.0 * x[i];
        }
        g[n - 1] += (x[n - 1] * x[n - 1]).cos() * x[n - 1];
        g
    })
}

fn engval1(n: usize) -> ProblemSpec {
    ProblemSpec::new("engval1", vec![2.0; n], |x| {
        x.windows(2)
            .map(|w| {
                let q = w[0] * w[0] + w[1] * w[1];
                q * q - 4.0 * w[0] + 3.0
            })
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let q = x[i] * x[i] + x[i + 1] * x[i + 1];
            g[i] += 4.0 * x[i] * q - 4.0;
            g[i + 1] += 4.0 * x[i + 1] * q;
        }
        g
    })
}

fn liarwhd(n: usize) -> ProblemSpec {
    ProblemSpec::new("liarwhd", vec![4.0; n], |x| {
        x.iter()
            .map(|&v| {
                let a = v * v - x[0];
                4.0 * a * a + (v - 1.0) * (v - 1.0)
            })
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let c = 8.0 * (x[i] * x[i] - x[0]);
            g[i] += c * 2.0 * x[i] + 2.0 * (x[i] - 1.0);
            g[0] -= c;
        }
        g
    })
    .with_f_lower(0.0)
}

fn nondia(n: usize) -> ProblemSpec {
    ProblemSpec::new("nondia", vec![-1.0; n], |x| {
        let n = x.len();
        let tail: f64 = x[..n - 1]
            .iter()
            .map(|v| {
                let a = x[0] - v * v;
                100.0 * a * a
            })
            .sum();
        (x[0] - 1.0).powi(2) + tail
    })
    .with_gradient(|x| {
        let n = x.len();
        let mut g = vec![0.0; n];
        g[0] = 2.0 * (x[0] - 1.0);
        for j in 0..n - 1 {
            let a = 200.0 * (x[0] - x[j] * x[j]);
            g[0] += a;
            g[j] -= a * 2.0 * x[j];
        }
        g
    })
    .with_f_lower(0.0)
}

fn power(n: usize) -> ProblemSpec {
    ProblemSpec::new("power", vec![1.0; n], |x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let t = (i + 1) as f64 * v;
                t * t
            })
            .sum()
    })
    .with_gradient(|x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| 2.0 * ((i + 1) as f64).powi(2) * v)
            .collect()
    })
    .with_lipschitz(2.0 * (n as f64).powi(2))
    .with_f_lower(0.0)
}

fn rosenbrock(n: usize) -> ProblemSpec {
    let x0 = (0..n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect();
    ProblemSpec::new("rosenbrock", x0, |x| {
        x.windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                100.0 * a * a + (1.0 - w[0]) * (1.0 - w[0])
            })
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        g
    })
    .with_f_lower(0.0)
}

const SPARSQUR_MULTIPLIERS: [usize; 5] = [2, 3, 5, 7, 11];

/// The six coordinates coupled in group `i` (0-based), possibly repeated
/// when `n` is small.
fn sparsqur_indices(i: usize, n: usize) -> [usize; 6] {
    let one_based = i + 1;
    let mut idx = [i; 6];
    for (slot, k) in idx[1..].iter_mut().zip(SPARSQUR_MULTIPLIERS) {
        *slot = (k * one_based - 1) % n;
    }
    idx
}

fn sparsqur(n: usize) -> ProblemSpec {
    ProblemSpec::new("sparsqur", vec![0.5; n], |x| {
        let n = x.len();
        (0..n)
            .map(|i| {
                let s: f64 = sparsqur_indices(i, n).iter().map(|&j| x[j] * x[j]).sum();
                (i + 1) as f64 / 8.0 * s * s
            })
            .sum()
    })
    .with_gradient(|x| {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let idx = sparsqur_indices(i, n);
            let s: f64 = idx.iter().map(|&j| x[j] * x[j]).sum();
            let c = (i + 1) as f64 / 4.0 * s;
            for j in idx {
                g[j] += c * 2.0 * x[j];
            }
        }
        g
    })
    .with_f_lower(0.0)
}

fn sphere(n: usize) -> ProblemSpec {
    ProblemSpec::new("sphere", vec![1.0; n], |x| x.iter().map(|v| v * v).sum())
        .with_gradient(|x| x.iter().map(|v| 2.0 * v).collect())
        .with_lipschitz(2.0)
        .with_f_lower(0.0)
}

fn woods(n: usize) -> ProblemSpec {
    let x0 = (0..n).map(|i| if i % 2 == 0 { -3.0 } else { -1.0 }).collect();
    ProblemSpec::new("woods", x0, |x| {
        x.chunks_exact(4)
            .map(|b| {
                let (x1, x2, x3, x4) = (b[0], b[1], b[2], b[3]);
                100.0 * (x2 - x1 * x1).powi(2)
                    + (1.0 - x1).powi(2)
                    + 90.0 * (x4 - x3 * x3).powi(2)
                    + (1.0 - x3).powi(2)
                    + 10.0 * (x2 + x4 - 2.0).powi(2)
                    + 0.1 * (x2 - x4).powi(2)
            })
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for (b, gb) in x.chunks_exact(4).zip(g.chunks_exact_mut(4)) {
            let (x1, x2, x3, x4) = (b[0], b[1], b[2], b[3]);
            let a = x2 - x1 * x1;
            let c = x4 - x3 * x3;
            let s = 20.0 * (x2 + x4 - 2.0);
            let d = 0.2 * (x2 - x4);
            gb[0] = -400.0 * x1 * a - 2.0 * (1.0 - x1);
            gb[1] = 200.0 * a + s + d;
            gb[2] = -360.0 * x3 * c - 2.0 * (1.0 - x3);
            gb[3] = 180.0 * c + s - d;
        }
        g
    })
    .with_f_lower(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::truncate_value;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn central_difference(p: &ProblemSpec, x: &[f64], h: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + h;
                let fp = p.eval(&y);
                y[i] = x[i] - h;
                let fm = p.eval(&y);
                y[i] = x[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        diff / scale.max(1.0)
    }

    fn dim_for(name: &str) -> usize {
        if name == "woods" {
            8
        } else {
            7
        }
    }

    #[test]
    fn gradients_match_central_differences_at_x0() {
        for e in catalog() {
            let p = make_problem(e.name, dim_for(e.name)).unwrap();
            let h = 1e-6 * crate::linalg::norm(&p.x0).max(1.0);
            let fd = central_difference(&p, &p.x0, h);
            let g = p.gradient(&p.x0).expect("catalog problems carry gradients");
            assert!(rel_err(&g, &fd) <= 1e-6, "{}: {g:?} vs {fd:?}", e.name);
        }
    }

    #[test]
    fn gradients_match_central_differences_at_random_points() {
        let mut rng = StdRng::seed_from_u64(11);
        for e in catalog() {
            let p = make_problem(e.name, dim_for(e.name)).unwrap();
            for _ in 0..10 {
                let x: Vec<f64> = (0..p.n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let h = 1e-6 * crate::linalg::norm(&x).max(1.0);
                let fd = central_difference(&p, &x, h);
                let g = p.gradient(&x).unwrap();
                assert!(rel_err(&g, &fd) <= 1e-4, "{} at {x:?}", e.name);
            }
        }
    }

    #[test]
    fn starting_values_match_closed_forms() {
        let at = |name: &str, n: usize| {
            let p = make_problem(name, n).unwrap();
            p.eval(&p.x0)
        };
        assert_eq!(at("arwhead", 100), 297.0);
        assert_eq!(at("arwhead", 10_000), 29997.0);
        assert_eq!(at("chrosen", 10_000), 20.0 * 9999.0);
        assert_eq!(at("liarwhd", 10_000), 585.0 * 10_000.0);
        assert_eq!(at("engval1", 10_000), 59.0 * 9999.0);
        assert_eq!(at("woods", 10_000), 19192.0 * 2500.0);
        assert_eq!(at("brybnd", 10_000), 36.0 * 10_000.0);
        assert_eq!(at("sphere", 2), 2.0);
    }

    #[test]
    fn chopped_starting_values_at_ten_thousand() {
        let chopped = |name: &str| {
            let p = make_problem(name, 10_000).unwrap();
            truncate_value(p.eval(&p.x0), 3)
        };
        assert_eq!(chopped("arwhead"), 2.99e4);
        assert_eq!(chopped("brybnd"), 3.60e5);
        assert_eq!(chopped("chrosen"), 1.99e5);
        assert_eq!(chopped("engval1"), 5.89e5);
        assert_eq!(chopped("liarwhd"), 5.85e6);
        assert_eq!(chopped("power"), 3.33e11);
        assert_eq!(chopped("sparsqur"), 1.40e7);
        assert_eq!(chopped("woods"), 4.79e7);
        // eg2 is the only negative starting value.
        assert_eq!(chopped("eg2"), -8.41e3);
    }

    #[test]
    fn sphere_is_the_canonical_quadratic() {
        let p = make_problem("sphere", 2).unwrap();
        assert_eq!(p.x0, vec![1.0, 1.0]);
        assert_eq!(p.lipschitz, Some(2.0));
        assert_eq!(p.eval(&[3.0, 4.0]), 25.0);
    }

    #[test]
    fn known_minimizers_reach_f_lower() {
        let mut x = vec![1.0; 10];
        x[9] = 0.0;
        assert_eq!(make_problem("arwhead", 10).unwrap().eval(&x), 0.0);
        for name in ["chrosen", "rosenbrock", "liarwhd", "nondia", "woods"] {
            let p = make_problem(name, 8).unwrap();
            assert_eq!(p.eval(&[1.0; 8]), 0.0, "{name}");
        }
    }

    #[test]
    fn catalog_errors_identify_the_field() {
        assert_eq!(
            make_problem("cube", 10).unwrap_err(),
            CatalogError::UnknownProblem { name: "cube".into() }
        );
        let err = make_problem("woods", 10).unwrap_err();
        assert!(matches!(err, CatalogError::InvalidDimension { n: 10, .. }));
        assert!(err.to_string().contains("divisible by 4"));
        assert!(make_problem("arwhead", 1).is_err());
    }

    #[test]
    fn catalog_has_the_required_problems() {
        for name in [
            "arwhead", "chrosen", "rosenbrock", "sphere", "power", "sparsqur", "nondia",
            "woods", "eg2", "liarwhd", "engval1", "brybnd",
        ] {
            assert!(catalog().iter().any(|e| e.name == name), "{name}");
        }
    }
}
