//! Ordered block decompositions `(X_1, T_1) → ... → (X_d, T_d)` and the
//! pressure formula `P(T, φ) = max_i P(T_i, φ|T_i)`.

use serde::{Deserialize, Serialize};

use super::spectral::spectral_pressure;
use super::{FiniteCorrespondence, Potential};
use crate::error::{Error, Result};

/// One block `X_i`, optionally with the sub-relation `T_i` it is declared to
/// carry (global state indices). Without a declaration `T_i` is `T|X_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub states: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_edges: Option<Vec<(usize, usize)>>,
}

impl Block {
    pub fn new(states: Vec<usize>) -> Self {
        Block {
            states,
            declared_edges: None,
        }
    }
}

impl From<Vec<usize>> for Block {
    fn from(states: Vec<usize>) -> Self {
        Block::new(states)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFailure {
    /// Violated condition: "input", "i", "iii", "iv" or "v".
    pub condition: String,
    pub block: Option<usize>,
    pub witness_state: Option<usize>,
    pub witness_edge: Option<(usize, usize)>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub passed: bool,
    pub failure: Option<DecompositionFailure>,
}

impl DecompositionReport {
    fn fail(
        condition: &str,
        block: Option<usize>,
        witness_state: Option<usize>,
        witness_edge: Option<(usize, usize)>,
        message: String,
    ) -> Self {
        DecompositionReport {
            passed: false,
            failure: Some(DecompositionFailure {
                condition: condition.into(),
                block,
                witness_state,
                witness_edge,
                message,
            }),
        }
    }
}

/// Checks the decomposition conditions and reports the first violation.
///
/// Closedness of blocks is automatic on a finite set. Condition (iv) is only
/// informative when a block declares its sub-relation.
pub fn decomposition_validate(t: &FiniteCorrespondence, blocks: &[Block]) -> DecompositionReport {
    let n = t.n_states();
    if blocks.is_empty() {
        return DecompositionReport::fail("input", None, None, None, "no blocks".into());
    }
    let mut member = vec![vec![false; n]; blocks.len()];
    for (b, block) in blocks.iter().enumerate() {
        if block.states.is_empty() {
            return DecompositionReport::fail("input", Some(b), None, None, "empty block".into());
        }
        for &s in &block.states {
            if s >= n {
                return DecompositionReport::fail(
                    "input",
                    Some(b),
                    Some(s),
                    None,
                    format!("state {s} out of range"),
                );
            }
            member[b][s] = true;
        }
    }
    // (i) cover
    if let Some(s) = (0..n).find(|&s| !member.iter().any(|m| m[s])) {
        return DecompositionReport::fail(
            "i",
            None,
            Some(s),
            None,
            format!("state {s} lies in no block"),
        );
    }
    for (b, block) in blocks.iter().enumerate() {
        // (iii) T_i has nonempty rows on X_i
        for &x in &block.states {
            if !t.successors(x).any(|y| member[b][y]) {
                return DecompositionReport::fail(
                    "iii",
                    Some(b),
                    Some(x),
                    None,
                    format!("state {x} has no successor inside block {b}"),
                );
            }
        }
        // (iv) T(x) ∩ X_i = T_i(x)
        if let Some(declared) = &block.declared_edges {
            for &(x, y) in declared {
                if !member[b][x] || !member[b][y] || !t.contains(x, y) {
                    return DecompositionReport::fail(
                        "iv",
                        Some(b),
                        Some(x),
                        Some((x, y)),
                        format!("declared edge ({x}, {y}) is not an edge of T inside block {b}"),
                    );
                }
            }
            for &x in &block.states {
                for y in t.successors(x).filter(|&y| member[b][y]) {
                    if !declared.contains(&(x, y)) {
                        return DecompositionReport::fail(
                            "iv",
                            Some(b),
                            Some(x),
                            Some((x, y)),
                            format!("edge ({x}, {y}) of T|X_{b} is missing from the declared T_{b}"),
                        );
                    }
                }
            }
        }
    }
    // (v) T(X_i) misses (X_1 ∪ ... ∪ X_{i-1}) \ X_i
    for b in 1..blocks.len() {
        for &x in &blocks[b].states {
            for y in t.successors(x) {
                if !member[b][y] && (0..b).any(|k| member[k][y]) {
                    return DecompositionReport::fail(
                        "v",
                        Some(b),
                        Some(x),
                        Some((x, y)),
                        format!("edge ({x}, {y}) returns from block {b} to an earlier block"),
                    );
                }
            }
        }
    }
    DecompositionReport {
        passed: true,
        failure: None,
    }
}

/// `max_i P(T_i, φ|T_i)` over a valid decomposition, with the per-block values.
pub fn decomposition_pressure(
    t: &FiniteCorrespondence,
    phi: &Potential,
    blocks: &[Block],
) -> Result<(f64, Vec<f64>)> {
    phi.check(t)?;
    let report = decomposition_validate(t, blocks);
    if let Some(f) = report.failure {
        return Err(Error::InvalidDecomposition(format!(
            "condition ({}): {}",
            f.condition, f.message
        )));
    }
    let mut per_block = Vec::with_capacity(blocks.len());
    for block in blocks {
        let (sub, ids) = t.induced(&block.states)?;
        let restricted = Potential::from_values(&sub, ids.iter().map(|&id| phi.get(id)).collect())?;
        per_block.push(spectral_pressure(&sub, &restricted)?.pressure);
    }
    let best = per_block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((best, per_block))
}
