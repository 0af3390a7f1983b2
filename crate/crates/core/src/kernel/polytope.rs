//! Extreme points of the polytope of `T`-invariant measures and finite
//! extremal decompositions.
//!
//! The invariant measures are the first marginals of the pair-measure
//! polytope `{ν ≥ 0 on edges, Σν = 1, π₁ν = π₂ν}`. Its vertices are found in
//! exact rational arithmetic, projected, and the projections that are convex
//! combinations of the others are discarded.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{is_invariant, InvarianceMode, StateMeasure};
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::relation::FiniteCorrespondence;

/// Vertex enumeration is exponential; larger relations are refused.
pub const MAX_EXTREME_EDGES: usize = 24;
const MAX_BASES: usize = 2_000_000;
const MAX_SUBSETS: usize = 200_000;

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Extreme points of `P_T(X)` as exact rational vectors, sorted in
/// decreasing lexicographic order.
pub fn invariant_polytope_extremes_exact(t: &FiniteCorrespondence) -> Result<Vec<Vec<BigRational>>> {
    let n = t.n_states();
    let m = t.n_edges();
    if m > MAX_EXTREME_EDGES {
        return Err(Error::TooLarge(format!(
            "{m} edges exceed the vertex-enumeration limit of {MAX_EXTREME_EDGES}"
        )));
    }
    // conservation rows, then total mass
    let mut a = vec![vec![rat(0); m]; n + 1];
    for (id, &(i, j)) in t.edges().iter().enumerate() {
        a[i][id] = a[i][id].clone() + rat(1);
        a[j][id] = a[j][id].clone() - rat(1);
        a[n][id] = rat(1);
    }
    let mut b = vec![rat(0); n + 1];
    b[n] = rat(1);
    let vertices = lp::enumerate_vertices(&a, &b, MAX_BASES)
        .ok_or_else(|| Error::TooLarge("too many feasible bases".into()))?;

    let mut projected: Vec<Vec<BigRational>> = Vec::new();
    for v in &vertices {
        let mut mu = vec![rat(0); n];
        for (id, &(i, _)) in t.edges().iter().enumerate() {
            mu[i] = mu[i].clone() + v[id].clone();
        }
        if !projected.contains(&mu) {
            projected.push(mu);
        }
    }
    let mut extremes: Vec<Vec<BigRational>> = (0..projected.len())
        .filter(|&k| !in_hull_of_others(&projected, k))
        .map(|k| projected[k].clone())
        .collect();
    extremes.sort_by(|x, y| y.cmp(x));
    Ok(extremes)
}

/// Exact test of `p_k ∈ conv{p_j : j ≠ k}`.
fn in_hull_of_others(points: &[Vec<BigRational>], k: usize) -> bool {
    let others: Vec<&Vec<BigRational>> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, p)| p)
        .collect();
    if others.is_empty() {
        return false;
    }
    let dim = points[k].len();
    let mut a = vec![vec![rat(0); others.len()]; dim + 1];
    for (c, p) in others.iter().enumerate() {
        for r in 0..dim {
            a[r][c] = p[r].clone();
        }
        a[dim][c] = rat(1);
    }
    let mut b = points[k].clone();
    b.push(rat(1));
    lp::feasible_point(&a, &b).is_some()
}

/// Extreme points of `P_T(X)`, i.e. `P^e_T(X)`.
pub fn invariant_polytope_extremes(t: &FiniteCorrespondence) -> Result<Vec<StateMeasure>> {
    invariant_polytope_extremes_exact(t)?
        .into_iter()
        .map(|p| {
            StateMeasure::normalized(p.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect())
        })
        .collect()
}

/// Writes an invariant `μ` as `Σ λ_k m_k` over extreme points `m_k`.
///
/// Among exact decompositions the one with the fewest atoms is returned, the
/// first in lexicographic order of extreme-point indices on ties. If the
/// subset search exceeds its budget the basic solution of a single LP (at most
/// `n + 1` atoms) is returned instead.
pub fn extremal_decomposition(
    mu: &StateMeasure,
    t: &FiniteCorrespondence,
) -> Result<Vec<(f64, StateMeasure)>> {
    if !is_invariant(mu, t, InvarianceMode::Lp)?.invariant {
        return Err(Error::NotInvariant);
    }
    let extremes = invariant_polytope_extremes(t)?;
    let k = extremes.len();
    let max_atoms = k.min(t.n_states() + 1);
    let mut budget = MAX_SUBSETS;
    for size in 1..=max_atoms {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            if budget == 0 {
                break;
            }
            budget -= 1;
            if let Some(weights) = solve_weights(mu, &extremes, &subset) {
                return Ok(subset
                    .iter()
                    .zip(weights)
                    .map(|(&s, w)| (w, extremes[s].clone()))
                    .collect());
            }
            if !next_combination(&mut subset, k) {
                break;
            }
        }
        if budget == 0 {
            break;
        }
    }
    let all: Vec<usize> = (0..k).collect();
    let weights = solve_weights(mu, &extremes, &all).ok_or(Error::NotInvariant)?;
    Ok(all
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .map(|(s, w)| (w, extremes[s].clone()))
        .collect())
}

/// Nonnegative weights on `subset` reproducing `μ` to 1e-10 in l1.
fn solve_weights(mu: &StateMeasure, extremes: &[StateMeasure], subset: &[usize]) -> Option<Vec<f64>> {
    let n = mu.len();
    let mut a = vec![vec![0.0; subset.len()]; n + 1];
    for (c, &s) in subset.iter().enumerate() {
        for r in 0..n {
            a[r][c] = extremes[s].get(r);
        }
        a[n][c] = 1.0;
    }
    let mut b = mu.weights().to_vec();
    b.push(1.0);
    let cost = vec![0.0; subset.len()];
    let LpOutcome::Optimal { x, .. } = lp::minimize(&cost, &a, &b) else {
        return None;
    };
    let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = x.iter().sum();
    if total.is_zero() {
        return None;
    }
    let x: Vec<f64> = x.into_iter().map(|v| v / total).collect();
    let residual: f64 = (0..n)
        .map(|r| {
            let approx: f64 = subset.iter().zip(&x).map(|(&s, w)| w * extremes[s].get(r)).sum();
            (approx - mu.get(r)).abs()
        })
        .sum();
    (residual <= 1e-10).then_some(x)
}

/// Advances `c` to the next `c.len()`-subset of `0..k` in lexicographic order.
fn next_combination(c: &mut [usize], k: usize) -> bool {
    let s = c.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if c[i] < k - s + i {
            c[i] += 1;
            for j in i + 1..s {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
