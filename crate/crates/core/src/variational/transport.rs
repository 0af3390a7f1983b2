//! `P_μ(T, φ)` as an entropic transport problem between `μ` and itself on the
//! edges of `T`, and the abstract pressure `𝔓_μ(T, φ)`.

use serde::{Deserialize, Serialize};

use super::dual::abstract_kernel_entropy;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::kernel::{PairMeasure, StateMeasure};
use crate::lp::{self, LpOutcome};
use crate::relation::{FiniteCorrespondence, Potential};

const MARGINAL_TARGET: f64 = 1e-12;
const MAX_SCALING_ITERATIONS: usize = 200_000;
/// LP entries above this count as positive when building the support face.
const FACE_THRESHOLD: f64 = 1e-11;
const GOLDEN_STEPS: usize = 12;

/// Result of [`measure_pressure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePressure {
    pub value: f64,
    /// Optimal pair measure; both marginals are `μ`.
    pub pair: PairMeasure,
    pub iterations: usize,
    /// Final `‖π₁ν − μ‖₁`.
    pub residual: f64,
}

/// `P_μ(T, φ) = max {Σ ν (φ − log(ν(i,j)/μ(i)))}` over pair measures on the
/// edges with both marginals `μ`.
///
/// The maximizer is `ν = diag(a) e^φ diag(b)` on the edges that some feasible
/// pair measure charges; these are found by linear programming first and the
/// scaling vectors by alternating marginal fits in the log domain.
pub fn measure_pressure(
    t: &FiniteCorrespondence,
    phi: &Potential,
    mu: &StateMeasure,
) -> Result<MeasurePressure> {
    phi.check(t)?;
    let face = feasible_face(t, mu)?;
    let (pair, iterations, residual) = scale(t, phi.values(), mu, &face)?;
    let value = entropic_value(t, phi.values(), mu, &pair);
    Ok(MeasurePressure {
        value,
        pair,
        iterations,
        residual,
    })
}

fn entropic_value(t: &FiniteCorrespondence, phi: &[f64], mu: &StateMeasure, nu: &PairMeasure) -> f64 {
    t.edges()
        .iter()
        .enumerate()
        .filter(|&(id, _)| nu.get(id) > 0.0)
        .map(|(id, &(i, _))| {
            let w = nu.get(id);
            w * (phi[id] - (w / mu.get(i)).ln())
        })
        .sum()
}

/// Edges charged by some pair measure with both marginals `μ`.
///
/// Each round maximizes the mass on edges not yet known to be chargeable; the
/// face is complete once that maximum is zero.
pub(crate) fn feasible_face(t: &FiniteCorrespondence, mu: &StateMeasure) -> Result<Vec<bool>> {
    let n = t.n_states();
    if mu.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    let vars: Vec<usize> = (0..t.n_edges())
        .filter(|&id| {
            let (i, j) = t.edges()[id];
            mu.get(i) > 0.0 && mu.get(j) > 0.0
        })
        .collect();
    let mut a = vec![vec![0.0; vars.len()]; 2 * n];
    for (c, &id) in vars.iter().enumerate() {
        let (i, j) = t.edges()[id];
        a[i][c] = 1.0;
        a[n + j][c] = 1.0;
    }
    let b: Vec<f64> = mu.weights().iter().chain(mu.weights()).copied().collect();

    let mut known = vec![false; vars.len()];
    loop {
        let cost: Vec<f64> = known.iter().map(|&k| if k { 0.0 } else { -1.0 }).collect();
        let x = match lp::minimize(&cost, &a, &b) {
            LpOutcome::Optimal { x, .. } => x,
            _ => return Err(Error::NotInvariant),
        };
        let residual: f64 = (0..2 * n)
            .map(|r| (a[r].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - b[r]).abs())
            .sum();
        if residual > 1e-9 {
            return Err(Error::NotInvariant);
        }
        let mut grew = false;
        for (c, &v) in x.iter().enumerate() {
            if !known[c] && v > FACE_THRESHOLD {
                known[c] = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let mut face = vec![false; t.n_edges()];
    for (c, &id) in vars.iter().enumerate() {
        face[id] = known[c];
    }
    Ok(face)
}

/// Log-domain matrix scaling of `e^φ` on `face` to marginals `(μ, μ)`.
fn scale(
    t: &FiniteCorrespondence,
    phi: &[f64],
    mu: &StateMeasure,
    face: &[bool],
) -> Result<(PairMeasure, usize, f64)> {
    let n = t.n_states();
    let edges: Vec<(usize, usize, f64, usize)> = t
        .edges()
        .iter()
        .enumerate()
        .filter(|&(id, _)| face[id])
        .map(|(id, &(i, j))| (i, j, phi[id], id))
        .collect();
    let log_mu: Vec<f64> = mu.weights().iter().map(|w| w.ln()).collect();
    let mut la = vec![0.0; n];
    let mut lb = vec![0.0; n];
    let mut buf = vec![Vec::new(); n];

    let fit = |target: &mut [f64], other: &[f64], buf: &mut [Vec<f64>], rows: bool| {
        for v in buf.iter_mut() {
            v.clear();
        }
        for &(i, j, p, _) in &edges {
            if rows {
                buf[i].push(p + other[j]);
            } else {
                buf[j].push(p + other[i]);
            }
        }
        for s in 0..n {
            if !buf[s].is_empty() {
                target[s] = log_mu[s] - logsumexp(&buf[s]);
            }
        }
    };

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_SCALING_ITERATIONS {
        iterations += 1;
        fit(&mut la, &lb, &mut buf, true);
        fit(&mut lb, &la, &mut buf, false);
        // columns are exact after the second fit; measure the rows
        let mut rows = vec![0.0; n];
        for &(i, j, p, _) in &edges {
            rows[i] += (la[i] + p + lb[j]).exp();
        }
        residual = rows.iter().zip(mu.weights()).map(|(r, m)| (r - m).abs()).sum();
        if !residual.is_finite() {
            return Err(Error::ScalingDiverged("non-finite scaling vectors".into()));
        }
        if residual <= MARGINAL_TARGET {
            break;
        }
    }
    if residual > MARGINAL_TARGET {
        return Err(Error::ScalingDiverged(format!(
            "marginal error {residual:.3e} after {iterations} iterations"
        )));
    }
    let mut weights = vec![0.0; t.n_edges()];
    for &(i, j, p, id) in &edges {
        weights[id] = (la[i] + p + lb[j]).exp();
    }
    Ok((PairMeasure::normalized(t, weights)?, iterations, residual))
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Result of [`abstract_measure_pressure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractPressure {
    pub value: f64,
    /// Best member `ν_s` of the searched family and its parameter `s`.
    pub pair: PairMeasure,
    pub s: f64,
    pub evaluations: usize,
}

/// `𝔓_μ(T, φ) = sup {𝔥(ν) + ⟨ν, φ⟩}` over pair measures with both marginals `μ`.
///
/// The search runs over the family `ν_s` of scaling solutions for `sφ`: a grid
/// on `s ∈ [0, 2]` followed by golden-section refinement around the best grid
/// point. `ν_1` is the maximizer of [`measure_pressure`], so the result is
/// never below it.
pub fn abstract_measure_pressure(
    t: &FiniteCorrespondence,
    phi: &Potential,
    mu: &StateMeasure,
    config: &SolverConfig,
) -> Result<AbstractPressure> {
    phi.check(t)?;
    let face = feasible_face(t, mu)?;
    let mut evaluations = 0;
    let mut best: Option<(f64, f64, PairMeasure)> = None;
    let mut objective = |s: f64| -> Result<f64> {
        evaluations += 1;
        let scaled: Vec<f64> = phi.values().iter().map(|v| s * v).collect();
        let (nu, _, _) = scale(t, &scaled, mu, &face)?;
        let h = abstract_kernel_entropy(t, &nu, config)?.value;
        let g = h + nu.integrate(phi.values());
        if best.as_ref().is_none_or(|b| g > b.0) {
            best = Some((g, s, nu));
        }
        Ok(g)
    };

    let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
    let mut values = Vec::with_capacity(grid.len());
    for &s in &grid {
        values.push(objective(s)?);
    }
    let k = (0..grid.len())
        .max_by(|&x, &y| values[x].total_cmp(&values[y]).then(y.cmp(&x)))
        .expect("nonempty grid");
    let (mut lo, mut hi) = (
        grid[k.saturating_sub(1)],
        grid[(k + 1).min(grid.len() - 1)],
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..GOLDEN_STEPS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    let (value, s, pair) = best.expect("evaluated");
    Ok(AbstractPressure {
        value,
        pair,
        s,
        evaluations,
    })
}
