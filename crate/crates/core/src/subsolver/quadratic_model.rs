//! Experimental model-based inner method.
//!
//! Each round interpolates a separable quadratic on the `2p + 1` points
//! `{c} ∪ {c ± r e_j}`, minimizes it inside the box of half-width `2r`, and
//! evaluates the model minimizer. The center moves to the best point seen;
//! `r` doubles after a successful model step and halves otherwise.

use super::ReducedEval;

pub(crate) fn minimize(eval: &mut ReducedEval<'_>, p: usize, f0: f64, scale: f64) -> (Vec<f64>, f64) {
    let mut center = vec![0.0; p];
    let mut f_center = f0;
    let mut radius = scale;

    'rounds: loop {
        let mut grad = vec![0.0; p];
        let mut curv = vec![0.0; p];
        let mut best: Option<(Vec<f64>, f64)> = None;
        for j in 0..p {
            let mut side = [0.0; 2];
            for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut a = center.clone();
                a[j] += sign * radius;
                let Some(f) = eval.call(&a) else {
                    if let Some((a, f)) = best {
                        return (a, f);
                    }
                    break 'rounds;
                };
                if f < best.as_ref().map_or(f_center, |b| b.1) {
                    best = Some((a, f));
                }
                side[k] = f;
            }
            grad[j] = (side[0] - side[1]) / (2.0 * radius);
            curv[j] = (side[0] - 2.0 * f_center + side[1]) / (radius * radius);
        }

        let step: Vec<f64> = grad
            .iter()
            .zip(&curv)
            .map(|(&g, &h)| {
                let limit = 2.0 * radius;
                if !g.is_finite() || !h.is_finite() {
                    0.0
                } else if h > 0.0 {
                    (-g / h).clamp(-limit, limit)
                } else if g != 0.0 {
                    -limit * g.signum()
                } else {
                    0.0
                }
            })
            .collect();

        let mut model_success = false;
        if step.iter().any(|s| *s != 0.0) {
            let trial: Vec<f64> = center.iter().zip(&step).map(|(c, s)| c + s).collect();
            let Some(f) = eval.call(&trial) else {
                if let Some((a, f)) = best {
                    return (a, f);
                }
                break;
            };
            if f < best.as_ref().map_or(f_center, |b| b.1) {
                best = Some((trial, f));
                model_success = true;
            }
        }

        if let Some((a, f)) = best {
            center = a;
            f_center = f;
        }
        radius = if model_success { 2.0 * radius } else { 0.5 * radius };
        if radius <= 1e-12 * scale {
            break;
        }
    }
    (center, f_center)
}
