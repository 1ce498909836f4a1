//! Forward-difference gradient estimation on the coordinate stencil
//! `{x} ∪ {x + τδ e_i}`.
//!
//! Linear interpolation on this stencil is the forward difference, and on a
//! function with `L`-Lipschitz gradient the estimate is within
//! `τ √n L δ / 2` of the true gradient.

use thiserror::Error;

use crate::linalg::norm_inf;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gg: Vec<f64>,
    /// Difference step actually used.
    pub step: f64,
    /// New evaluations spent on the stencil: `n + 1`, or `n` when the
    /// center value was reused.
    pub stencil_evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GradientError {
    /// Index 0 is the center, `i >= 1` the point along `e_i`.
    #[error("stencil value {index} is not finite")]
    NonFinite { index: usize },
    #[error("stencil needs a center and at least one point, got {len} values")]
    TooShort { len: usize },
}

/// Default stencil scale `τ = n^(-1/2)`, which keeps `τ √n` (and hence the
/// gradient error constant) independent of the dimension.
pub fn default_tau(n: usize) -> f64 {
    assert!(n >= 1);
    1.0 / (n as f64).sqrt()
}

/// Difference step `max(τδ, sqrt(eps) max(1, ‖x‖∞))`.
pub fn stencil_step(x: &[f64], delta: f64, tau: f64) -> f64 {
    (tau * delta).max(f64::EPSILON.sqrt() * norm_inf(x).max(1.0))
}

/// Returns `[x, x + τδ e_1, ..., x + τδ e_n]`.
pub fn build_stencil(x: &[f64], delta: f64, tau: f64) -> Vec<Vec<f64>> {
    let h = tau * delta;
    let mut points = Vec::with_capacity(x.len() + 1);
    points.push(x.to_vec());
    for i in 0..x.len() {
        let mut p = x.to_vec();
        p[i] += h;
        points.push(p);
    }
    points
}

/// Forward differences `(values[i] - values[0]) / step`, with `values[0]`
/// the center value.
pub fn estimate_gradient(values: &[f64], step: f64) -> Result<GradientEstimate, GradientError> {
    if values.len() < 2 {
        return Err(GradientError::TooShort { len: values.len() });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(GradientError::NonFinite { index });
    }
    let center = values[0];
    Ok(GradientEstimate {
        gg: values[1..].iter().map(|v| (v - center) / step).collect(),
        step,
        stencil_evals: values.len(),
    })
}

/// Same estimate from `(coordinate, value)` pairs in any order, as produced
/// by concurrent stencil workers. Coordinates are 0-based.
pub fn estimate_gradient_from_pairs(
    center: f64,
    pairs: &[(usize, f64)],
    step: f64,
) -> Result<GradientEstimate, GradientError> {
    let mut values = vec![f64::NAN; pairs.len() + 1];
    values[0] = center;
    for &(i, v) in pairs {
        values[i + 1] = v;
    }
    estimate_gradient(&values, step)
}
