#![allow(dead_code)]

use corrpress::{FiniteCorrespondence, Potential};
use proptest::prelude::*;

/// A relation on `1..=n_max` states from an adjacency pattern; states left
/// without a successor get one chosen by `fallback`.
pub fn relation(n_max: usize) -> impl Strategy<Value = FiniteCorrespondence> {
    (1..=n_max)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::bool::weighted(0.3), n * n),
                prop::collection::vec(0..n, n),
            )
        })
        .prop_map(|(n, adj, fallback)| build(n, &adj, &fallback, false))
}

/// A primitive relation: an `n`-cycle with a self-loop at 0 plus random edges.
pub fn primitive(n_min: usize, n_max: usize) -> impl Strategy<Value = FiniteCorrespondence> {
    (n_min..=n_max)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(prop::bool::weighted(0.3), n * n)))
        .prop_map(|(n, adj)| build(n, &adj, &[], true))
}

fn build(n: usize, adj: &[bool], fallback: &[usize], cycle: bool) -> FiniteCorrespondence {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let on_cycle = cycle && (j == (i + 1) % n || (i == 0 && j == 0));
            if adj[i * n + j] || on_cycle {
                edges.push((i, j));
            }
        }
        if !cycle && !edges.iter().any(|&(a, _)| a == i) {
            edges.push((i, fallback[i]));
        }
    }
    FiniteCorrespondence::new(n, &edges).unwrap()
}

/// `(T, φ)` with edge values in `[-amp, amp]`.
pub fn with_potential(
    t: impl Strategy<Value = FiniteCorrespondence>,
    amp: f64,
) -> impl Strategy<Value = (FiniteCorrespondence, Potential)> {
    t.prop_flat_map(move |t| {
        let m = t.n_edges();
        (Just(t), prop::collection::vec(-amp..=amp, m))
    })
    .prop_map(|(t, v)| {
        let phi = Potential::from_values(&t, v).unwrap();
        (t, phi)
    })
}

/// Positive weights, one per edge.
pub fn edge_weights(t: &FiniteCorrespondence) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, t.n_edges())
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}
