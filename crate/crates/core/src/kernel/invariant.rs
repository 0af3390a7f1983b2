//! `T`-invariance of state measures through its equivalent characterizations:
//! the subset inequality `μ(A) ≤ μ(T^{-1}A)`, an edge-supported pair measure
//! with both marginals `μ`, a kernel fixing `μ`, and a shift-invariant path
//! measure.

use serde::{Deserialize, Serialize};

use super::{PairMeasure, StateMeasure, TransitionKernel};
use crate::error::{Error, Result};
use crate::lp;
use crate::relation::FiniteCorrespondence;

/// Slack allowed in the subset inequality.
const SUBSET_SLACK: f64 = 1e-10;
/// Largest state count accepted by the exhaustive subset check.
pub const MAX_SUBSET_STATES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvarianceMode {
    Lp,
    Subsets,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    /// Edge-supported pair measure with both marginals `μ` (LP modes).
    pub witness: Option<PairMeasure>,
    /// First set `A` (by bitmask order) with `μ(A) > μ(T^{-1}A)` (subset modes).
    pub violating_set: Option<Vec<usize>>,
    /// In `Both` mode, whether the two characterizations agreed.
    pub modes_agree: Option<bool>,
}

/// Decides `T`-invariance of `μ` in the requested mode.
///
/// In `Both` mode `invariant` is the LP verdict and `modes_agree` records
/// whether the subset test reached the same one.
pub fn is_invariant(
    mu: &StateMeasure,
    t: &FiniteCorrespondence,
    mode: InvarianceMode,
) -> Result<InvarianceReport> {
    if mu.len() != t.n_states() {
        return Err(Error::ShapeMismatch {
            expected: t.n_states(),
            found: mu.len(),
        });
    }
    if mode != InvarianceMode::Lp && t.n_states() > MAX_SUBSET_STATES {
        return Err(Error::ModeUnsupported(format!(
            "subset enumeration needs at most {MAX_SUBSET_STATES} states, got {}",
            t.n_states()
        )));
    }
    match mode {
        InvarianceMode::Lp => {
            let witness = lp_witness(mu, t)?;
            Ok(InvarianceReport {
                invariant: witness.is_some(),
                witness,
                violating_set: None,
                modes_agree: None,
            })
        }
        InvarianceMode::Subsets => {
            let violating_set = subset_violation(mu, t);
            Ok(InvarianceReport {
                invariant: violating_set.is_none(),
                witness: None,
                violating_set,
                modes_agree: None,
            })
        }
        InvarianceMode::Both => {
            let witness = lp_witness(mu, t)?;
            let violating_set = subset_violation(mu, t);
            let agree = witness.is_some() == violating_set.is_none();
            Ok(InvarianceReport {
                invariant: witness.is_some(),
                witness,
                violating_set,
                modes_agree: Some(agree),
            })
        }
    }
}

/// Feasibility of `{ν ≥ 0 on edges, row marginal = column marginal = μ}`.
fn lp_witness(mu: &StateMeasure, t: &FiniteCorrespondence) -> Result<Option<PairMeasure>> {
    let n = t.n_states();
    let m = t.n_edges();
    let mut a = vec![vec![0.0; m]; 2 * n];
    for (id, &(i, j)) in t.edges().iter().enumerate() {
        a[i][id] = 1.0;
        a[n + j][id] = 1.0;
    }
    let b: Vec<f64> = mu.weights().iter().chain(mu.weights()).copied().collect();
    let Some(x) = lp::feasible_point(&a, &b) else {
        return Ok(None);
    };
    let nu = PairMeasure::normalized(t, x)?;
    // guard against a numerically feasible but distorted basis
    let gap: f64 = nu
        .first_marginal(t)
        .iter()
        .zip(nu.second_marginal(t))
        .zip(mu.weights())
        .map(|((a, b), m)| (a - m).abs() + (b - m).abs())
        .sum();
    if gap > 1e-9 {
        return Ok(None);
    }
    Ok(Some(nu))
}

fn subset_violation(mu: &StateMeasure, t: &FiniteCorrespondence) -> Option<Vec<usize>> {
    let n = t.n_states();
    // predecessor masks let T^{-1}(A) be assembled bitwise
    let mut pred = vec![0u32; n];
    for &(i, j) in t.edges() {
        pred[j] |= 1 << i;
    }
    let w = mu.weights();
    for mask in 1u32..(1u32 << n) {
        let mut pre = 0u32;
        let mut mass_a = 0.0;
        for s in 0..n {
            if mask & (1 << s) != 0 {
                pre |= pred[s];
                mass_a += w[s];
            }
        }
        let mass_pre: f64 = (0..n).filter(|&s| pre & (1 << s) != 0).map(|s| w[s]).sum();
        if mass_a > mass_pre + SUBSET_SLACK {
            return Some((0..n).filter(|&s| mask & (1 << s) != 0).collect());
        }
    }
    None
}

/// Kernel obtained from a pair measure by normalizing rows where `μ > 0`;
/// other rows are the Dirac mass on the lowest-index successor.
pub fn witness_kernel(t: &FiniteCorrespondence, nu: &PairMeasure) -> Result<TransitionKernel> {
    let first = nu.first_marginal(t);
    let mut probs = vec![0.0; t.n_edges()];
    for i in 0..t.n_states() {
        let range = t.out_edge_ids(i);
        if first[i] > 0.0 {
            for id in range {
                probs[id] = nu.get(id) / first[i];
            }
        } else {
            probs[range.start] = 1.0;
        }
    }
    TransitionKernel::from_unnormalized_rows(t, probs)
}

/// `ν(i,j) = μ(i) Q(i,j)`
pub fn pair_from_kernel(mu: &StateMeasure, q: &TransitionKernel) -> Result<PairMeasure> {
    let t = q.correspondence();
    if mu.len() != t.n_states() {
        return Err(Error::ShapeMismatch {
            expected: t.n_states(),
            found: mu.len(),
        });
    }
    let weights = t
        .edges()
        .iter()
        .zip(q.probs())
        .map(|(&(i, _), &p)| mu.get(i) * p)
        .collect();
    PairMeasure::normalized(t, weights)
}

/// Largest difference, over words of length `k ≤ k_max`, between the
/// probability of the word at time 0 and at time 1 under the Markov path
/// measure started from `μ`. Zero for a shift-invariant measure.
pub fn block_shift_defect(mu: &StateMeasure, q: &TransitionKernel, k_max: usize) -> Result<f64> {
    let n = q.n_states();
    if mu.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    if (n as f64).powi(k_max as i32) > 1e7 {
        return Err(Error::TooLarge(format!("{n}^{k_max} words")));
    }
    let one_step: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| mu.get(i) * q.get(i, j)).sum())
        .collect();
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        let mut word = vec![0usize; k];
        for code in 0..n.pow(k as u32) {
            let mut c = code;
            for slot in word.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            let tail: f64 = word.windows(2).map(|w| q.get(w[0], w[1])).product();
            let at0 = mu.get(word[0]) * tail;
            let at1 = one_step[word[0]] * tail;
            worst = worst.max((at0 - at1).abs());
        }
    }
    Ok(worst)
}
