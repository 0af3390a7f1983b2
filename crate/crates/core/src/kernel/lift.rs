//! Lifting an invariant measure of a map living inside a correspondence.
//!
//! If `T` restricted to a block `Y` is the graph of a map `f` (or the inverse
//! graph of a map `g`), an invariant measure of that map extends by zero to a
//! `T`-invariant measure on `X`, together with a kernel that fixes it.

use serde::{Deserialize, Serialize};

use super::{StateMeasure, TransitionKernel, STATIONARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::relation::FiniteCorrespondence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftVariant {
    /// `T(y) ∩ Y = {f(y)}` for every `y ∈ Y`.
    Forward,
    /// `T^{-1}(y) ∩ Y = {g(y)}` for every `y ∈ Y`, with `T` surjective.
    Inverse,
}

/// Extends `mu_on_block` (indexed by position in `block`) by zero and returns
/// it with a kernel `Q` supported by `T` satisfying `μ̂Q = μ̂`.
///
/// Rows off the block, and rows at states of zero mass, are the Dirac mass on
/// the lowest-index successor.
pub fn hat_lift(
    mu_on_block: &StateMeasure,
    block: &[usize],
    t: &FiniteCorrespondence,
    variant: LiftVariant,
) -> Result<(StateMeasure, TransitionKernel)> {
    let n = t.n_states();
    if mu_on_block.len() != block.len() {
        return Err(Error::ShapeMismatch {
            expected: block.len(),
            found: mu_on_block.len(),
        });
    }
    let mut position = vec![None; n];
    for (k, &y) in block.iter().enumerate() {
        if y >= n {
            return Err(Error::IndexOutOfRange {
                index: y,
                n_states: n,
            });
        }
        if position[y].replace(k).is_some() {
            return Err(Error::InvalidInput(format!("state {y} repeated in block")));
        }
    }
    let mut hat = vec![0.0; n];
    for (k, &y) in block.iter().enumerate() {
        hat[y] = mu_on_block.get(k);
    }

    // the map on the block, as (source, target) pairs with mass flowing along them
    let arrows: Vec<(usize, usize)> = match variant {
        LiftVariant::Forward => block
            .iter()
            .map(|&y| {
                let mut image = t.successors(y).filter(|&z| position[z].is_some());
                match (image.next(), image.next()) {
                    (Some(z), None) => Ok((y, z)),
                    _ => Err(Error::NotAFunctionOnBlock(y)),
                }
            })
            .collect::<Result<_>>()?,
        LiftVariant::Inverse => {
            if let Some(x) = (0..n).find(|&x| !t.edges().iter().any(|&(_, j)| j == x)) {
                return Err(Error::NotSurjective(x));
            }
            let mut pre = vec![Vec::new(); n];
            for &(i, j) in t.edges() {
                if position[i].is_some() && position[j].is_some() {
                    pre[j].push(i);
                }
            }
            block
                .iter()
                .map(|&y| match pre[y].as_slice() {
                    &[x] => Ok((x, y)),
                    _ => Err(Error::NotAFunctionOnBlock(y)),
                })
                .collect::<Result<_>>()?
        }
    };

    // invariance of the block measure under the map
    let mut inflow = vec![0.0; n];
    match variant {
        LiftVariant::Forward => {
            for &(y, z) in &arrows {
                inflow[z] += hat[y];
            }
        }
        LiftVariant::Inverse => {
            for &(x, y) in &arrows {
                inflow[x] += hat[y];
            }
        }
    }
    let defect: f64 = block.iter().map(|&y| (inflow[y] - hat[y]).abs()).sum();
    if defect > STATIONARY_TOLERANCE {
        return Err(Error::NotInvariantOnBlock);
    }

    let mut probs = vec![0.0; t.n_edges()];
    let mut filled = vec![false; n];
    for &(x, y) in &arrows {
        let id = t.edge_id(x, y).expect("arrow is an edge");
        match variant {
            LiftVariant::Forward => {
                probs[id] = 1.0;
                filled[x] = true;
            }
            LiftVariant::Inverse if hat[x] > 0.0 => {
                probs[id] = hat[y] / hat[x];
                filled[x] = true;
            }
            LiftVariant::Inverse => {}
        }
    }
    for x in 0..n {
        if !filled[x] {
            probs[t.out_edge_ids(x).start] = 1.0;
        }
    }
    let kernel = TransitionKernel::from_unnormalized_rows(t, probs)?;
    Ok((StateMeasure::new(hat)?, kernel))
}
