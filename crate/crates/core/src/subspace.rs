//! Low-dimensional search subspaces built from the approximate gradient and
//! the iteration history.
//!
//! Every basis is produced by [`orthonormalize`] with the approximate
//! gradient as the first generator, so it is always retained: a basis built
//! from a nonzero `gg` contains `gg` up to roundoff.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::linalg::{axpy, dot, norm, scale, sub};

/// Residual fraction below which a generator is treated as dependent.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Pairs with `sᵀy ≤ CURVATURE_TOL ‖s‖ ‖y‖` are skipped by the two-loop
/// recursion.
pub const CURVATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubspaceKind {
    /// `span{gg_k, x_k - x_{k-1}}`
    Cg,
    /// `span{gg_k, y_{k-1..k-m}, s_{k-1..k-m}}`
    Lmqn,
    /// The LMQN span plus the limited-memory quasi-Newton direction.
    LmqnQn,
}

impl SubspaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubspaceKind::Cg => "cg",
            SubspaceKind::Lmqn => "lmqn",
            SubspaceKind::LmqnQn => "lmqn-qn",
        }
    }

    /// Largest dimension a basis of this kind can have with memory `m`.
    pub fn max_dim(&self, m: usize) -> usize {
        match self {
            SubspaceKind::Cg => 2,
            SubspaceKind::Lmqn => 2 * m + 1,
            SubspaceKind::LmqnQn => 2 * m + 2,
        }
    }
}

impl fmt::Display for SubspaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubspaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cg" => Ok(SubspaceKind::Cg),
            "lmqn" => Ok(SubspaceKind::Lmqn),
            "lmqn-qn" => Ok(SubspaceKind::LmqnQn),
            other => Err(format!(
                "unknown subspace `{other}` (expected cg, lmqn or lmqn-qn)"
            )),
        }
    }
}

/// Orthonormal basis of a search subspace, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: Vec<Vec<f64>>,
    kind: SubspaceKind,
}

impl SubspaceBasis {
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn kind(&self) -> SubspaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `center + B α`
    pub fn point(&self, center: &[f64], alpha: &[f64]) -> Vec<f64> {
        debug_assert_eq!(alpha.len(), self.dim());
        let mut x = center.to_vec();
        for (a, col) in alpha.iter().zip(&self.columns) {
            axpy(*a, col, &mut x);
        }
        x
    }

    /// `Bᵀ v`
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, v)).collect()
    }

    /// `B Bᵀ v`
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let alpha = self.coordinates(v);
        self.point(&vec![0.0; v.len()], &alpha)
    }

    /// `‖v - B Bᵀ v‖`
    pub fn distance(&self, v: &[f64]) -> f64 {
        norm(&sub(v, &self.project(v)))
    }

    /// `‖BᵀB - I‖` in the max-entry norm.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }
}

/// Bounded history of `(s, y)` pairs, newest last; the oldest pair is
/// evicted when the capacity is exceeded.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPairs {
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
    capacity: usize,
}

impl HistoryPairs {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "history needs room for at least one pair");
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        debug_assert_eq!(s.len(), y.len());
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Pairs from oldest to newest.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y)| (s.as_slice(), y.as_slice()))
    }
}

/// Classical Gram–Schmidt with one reorthogonalization pass, in input order.
///
/// A vector is dropped when its residual after projection is at most
/// `drop_tol` times its original norm. Zero vectors are always dropped, so
/// the output is empty only when every input is zero.
pub fn orthonormalize<V: AsRef<[f64]>>(vectors: &[V], drop_tol: f64) -> Vec<Vec<f64>> {
    assert!(drop_tol > 0.0 && drop_tol < 1.0, "drop_tol must lie in (0, 1)");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let v = v.as_ref();
        let original = norm(v);
        if original == 0.0 || !original.is_finite() {
            continue;
        }
        let mut w = v.to_vec();
        for _ in 0..2 {
            let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &w)).collect();
            for (c, q) in coeffs.iter().zip(&basis) {
                axpy(-c, q, &mut w);
            }
        }
        let residual = norm(&w);
        if residual <= drop_tol * original {
            continue;
        }
        basis.push(scale(1.0 / residual, &w));
    }
    basis
}

fn basis_from(generators: &[&[f64]], kind: SubspaceKind) -> SubspaceBasis {
    SubspaceBasis {
        columns: orthonormalize(generators, DEFAULT_DROP_TOL),
        kind,
    }
}

/// Conjugate-gradient subspace `span{gg, x_cur - x_prev}`.
pub fn build_cg_subspace(gg: &[f64], x_cur: &[f64], x_prev: Option<&[f64]>) -> SubspaceBasis {
    debug_assert!(norm(gg) > 0.0, "caller handles gg = 0");
    match x_prev {
        Some(prev) => {
            let d = sub(x_cur, prev);
            basis_from(&[gg, &d], SubspaceKind::Cg)
        }
        None => basis_from(&[gg], SubspaceKind::Cg),
    }
}

fn lmqn_generators<'a>(gg: &'a [f64], history: &'a HistoryPairs) -> Vec<&'a [f64]> {
    let mut gens = Vec::with_capacity(2 * history.len() + 2);
    gens.push(gg);
    for (s, y) in history.iter().rev() {
        gens.push(y);
        gens.push(s);
    }
    gens
}

/// Limited-memory quasi-Newton subspace `span{gg, y_ℓ, s_ℓ}` over the
/// stored pairs, newest first.
pub fn build_lmqn_subspace(gg: &[f64], history: &HistoryPairs) -> SubspaceBasis {
    debug_assert!(norm(gg) > 0.0, "caller handles gg = 0");
    basis_from(&lmqn_generators(gg, history), SubspaceKind::Lmqn)
}

/// The LMQN subspace augmented with [`quasi_newton_direction`], when one
/// exists.
pub fn build_lmqn_qn_subspace(gg: &[f64], history: &HistoryPairs) -> SubspaceBasis {
    debug_assert!(norm(gg) > 0.0, "caller handles gg = 0");
    let mut gens = lmqn_generators(gg, history);
    let d = quasi_newton_direction(gg, history);
    if let Some(d) = &d {
        gens.push(d);
    }
    basis_from(&gens, SubspaceKind::LmqnQn)
}

/// Dispatches on `kind`.
pub fn build_subspace(
    kind: SubspaceKind,
    gg: &[f64],
    x_cur: &[f64],
    x_prev: Option<&[f64]>,
    history: &HistoryPairs,
) -> SubspaceBasis {
    match kind {
        SubspaceKind::Cg => build_cg_subspace(gg, x_cur, x_prev),
        SubspaceKind::Lmqn => build_lmqn_subspace(gg, history),
        SubspaceKind::LmqnQn => build_lmqn_qn_subspace(gg, history),
    }
}

/// Two-loop recursion: `d ≈ -H⁻¹ gg` from the stored pairs.
///
/// Pairs failing the curvature test are skipped. The initial inverse
/// Hessian is `γ I` with `γ = sᵀy / yᵀy` from the newest usable pair.
/// Returns `None` when no pair is usable.
pub fn quasi_newton_direction(gg: &[f64], history: &HistoryPairs) -> Option<Vec<f64>> {
    let usable: Vec<(&[f64], &[f64], f64)> = history
        .iter()
        .filter_map(|(s, y)| {
            let sy = dot(s, y);
            (sy > CURVATURE_TOL * norm(s) * norm(y)).then(|| (s, y, 1.0 / sy))
        })
        .collect();
    let &(s_last, y_last, _) = usable.last()?;
    let gamma = dot(s_last, y_last) / dot(y_last, y_last);

    let mut q = gg.to_vec();
    let mut alphas = vec![0.0; usable.len()];
    for (i, &(s, y, rho)) in usable.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alphas[i] = a;
        axpy(-a, y, &mut q);
    }
    let mut r = scale(gamma, &q);
    for (i, &(s, y, rho)) in usable.iter().enumerate() {
        let b = rho * dot(y, &r);
        axpy(alphas[i] - b, s, &mut r);
    }
    Some(scale(-1.0, &r))
}
