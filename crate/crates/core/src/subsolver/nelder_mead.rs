//! Nelder–Mead on the reduced coordinates `α ∈ R^p`.
//!
//! Standard coefficients: reflection 1, expansion 2, contraction ½,
//! shrink ½. Vertices with equal values are ordered by a random key drawn
//! from the caller's generator when the vertex is created, which matters
//! once values are truncated and ties become common.

use rand::{Rng, RngExt};

use super::ReducedEval;

const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone)]
struct Vertex {
    alpha: Vec<f64>,
    f: f64,
    key: u64,
}

/// Minimizes `eval` from `α = 0` (value `f0`, already known) with an
/// initial simplex of edge `scale` along each reduced coordinate.
///
/// Returns the best vertex. Stops when `eval` runs out of budget or the
/// simplex collapses.
pub(crate) fn minimize<R: Rng + ?Sized>(
    eval: &mut ReducedEval<'_>,
    p: usize,
    f0: f64,
    scale: f64,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let mut simplex = Vec::with_capacity(p + 1);
    simplex.push(Vertex {
        alpha: vec![0.0; p],
        f: f0,
        key: rng.random(),
    });
    for j in 0..p {
        let mut alpha = vec![0.0; p];
        alpha[j] = scale;
        let Some(f) = eval.call(&alpha) else {
            return best_of(&simplex);
        };
        simplex.push(Vertex {
            alpha,
            f,
            key: rng.random(),
        });
    }

    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f).then(a.key.cmp(&b.key)));
        if collapsed(&simplex, scale) {
            break;
        }
        let worst = &simplex[p];
        let centroid = centroid(&simplex[..p]);
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.alpha)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = toward(1.0);
        let Some(fr) = eval.call(&reflected) else {
            break;
        };
        let f_best = simplex[0].f;
        let f_second = simplex[p - 1].f;
        let f_worst = simplex[p].f;

        let replacement = if fr < f_best {
            let expanded = toward(EXPANSION);
            match eval.call(&expanded) {
                Some(fe) if fe < fr => Some((expanded, fe)),
                Some(_) => Some((reflected, fr)),
                None => {
                    replace_worst(&mut simplex, reflected, fr, rng);
                    break;
                }
            }
        } else if fr < f_second {
            Some((reflected, fr))
        } else if fr < f_worst {
            let outside = toward(CONTRACTION);
            match eval.call(&outside) {
                Some(fc) if fc <= fr => Some((outside, fc)),
                Some(_) => None,
                None => {
                    replace_worst(&mut simplex, reflected, fr, rng);
                    break;
                }
            }
        } else {
            let inside = toward(-CONTRACTION);
            match eval.call(&inside) {
                Some(fc) if fc < f_worst => Some((inside, fc)),
                Some(_) => None,
                None => break,
            }
        };

        match replacement {
            Some((alpha, f)) => replace_worst(&mut simplex, alpha, f, rng),
            None => {
                if !shrink(&mut simplex, eval, rng) {
                    break;
                }
            }
        }
    }
    best_of(&simplex)
}

fn replace_worst<R: Rng + ?Sized>(simplex: &mut [Vertex], alpha: Vec<f64>, f: f64, rng: &mut R) {
    let last = simplex.len() - 1;
    simplex[last] = Vertex {
        alpha,
        f,
        key: rng.random(),
    };
}

/// Pulls every vertex halfway toward the best one. Returns `false` if the
/// budget ran out part way.
fn shrink<R: Rng + ?Sized>(simplex: &mut [Vertex], eval: &mut ReducedEval<'_>, rng: &mut R) -> bool {
    let best = simplex[0].alpha.clone();
    for v in simplex.iter_mut().skip(1) {
        let alpha: Vec<f64> = best
            .iter()
            .zip(&v.alpha)
            .map(|(b, a)| b + SHRINK * (a - b))
            .collect();
        let Some(f) = eval.call(&alpha) else {
            return false;
        };
        *v = Vertex {
            alpha,
            f,
            key: rng.random(),
        };
    }
    true
}

fn centroid(vertices: &[Vertex]) -> Vec<f64> {
    let p = vertices[0].alpha.len();
    let mut c = vec![0.0; p];
    for v in vertices {
        for (ci, ai) in c.iter_mut().zip(&v.alpha) {
            *ci += ai;
        }
    }
    let k = vertices.len() as f64;
    c.iter_mut().for_each(|ci| *ci /= k);
    c
}

fn collapsed(simplex: &[Vertex], scale: f64) -> bool {
    let best = &simplex[0].alpha;
    simplex[1..].iter().all(|v| {
        v.alpha
            .iter()
            .zip(best)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
    })
}

fn best_of(simplex: &[Vertex]) -> (Vec<f64>, f64) {
    let best = simplex
        .iter()
        .min_by(|a, b| a.f.total_cmp(&b.f).then(a.key.cmp(&b.key)))
        .expect("simplex is never empty");
    (best.alpha.clone(), best.f)
}
