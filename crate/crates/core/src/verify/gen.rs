//! Seeded random instances for the verification batteries and tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kernel::{stationary_measures, PairMeasure, StateMeasure, TransitionKernel};
use crate::relation::{from_map, Block, FiniteCorrespondence, MapDirection, Potential};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A relation on `1..=n_max` states in which every state has a successor.
/// Usually reducible.
pub fn relation(rng: &mut ChaCha8Rng, n_max: usize) -> FiniteCorrespondence {
    let n = rng.gen_range(1..=n_max);
    let density = rng.gen_range(0.1..0.5);
    let mut edges = Vec::new();
    for i in 0..n {
        let before = edges.len();
        for j in 0..n {
            if rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
        if edges.len() == before {
            edges.push((i, rng.gen_range(0..n)));
        }
    }
    FiniteCorrespondence::new(n, &edges).expect("every state has a successor")
}

/// A primitive relation on `n` states: an `n`-cycle, a self-loop at 0 and
/// random extra edges with probability `density`.
pub fn primitive(rng: &mut ChaCha8Rng, n: usize, density: f64) -> FiniteCorrespondence {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    edges.push((0, 0));
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    FiniteCorrespondence::new(n, &edges).expect("cycle covers every state")
}

/// Edge values uniform in `[-amplitude, amplitude]`.
pub fn potential(rng: &mut ChaCha8Rng, t: &FiniteCorrespondence, amplitude: f64) -> Potential {
    let values = (0..t.n_edges()).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    Potential::from_values(t, values).expect("one value per edge")
}

/// Real-valued function on states, uniform in `[-amplitude, amplitude]`.
pub fn state_function(rng: &mut ChaCha8Rng, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-amplitude..=amplitude)).collect()
}

/// A kernel charging every edge of `t`.
pub fn kernel(rng: &mut ChaCha8Rng, t: &FiniteCorrespondence) -> TransitionKernel {
    let mut probs: Vec<f64> = (0..t.n_edges()).map(|_| rng.gen_range(0.05..1.0)).collect();
    for i in 0..t.n_states() {
        let range = t.out_edge_ids(i);
        let s: f64 = probs[range.clone()].iter().sum();
        for p in &mut probs[range] {
            *p /= s;
        }
    }
    TransitionKernel::new(t, probs).expect("rows are normalized")
}

/// A probability vector; with `sparse` about a third of the states get no mass.
pub fn state_measure(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> StateMeasure {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if sparse && rng.gen_bool(0.35) { 0.0 } else { rng.gen_range(0.01..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    StateMeasure::normalized(w).expect("positive mass")
}

/// A random convex combination of the stationary measures of a random
/// full-support kernel, together with that kernel when only one class is
/// recurrent.
pub fn invariant_measure(rng: &mut ChaCha8Rng, t: &FiniteCorrespondence) -> Result<StateMeasure> {
    let q = kernel(rng, t);
    let extremes = stationary_measures(&q)?;
    let mut w = vec![0.0; t.n_states()];
    for mu in &extremes {
        let c = rng.gen_range(0.05..1.0);
        for (a, b) in w.iter_mut().zip(mu.weights()) {
            *a += c * b;
        }
    }
    StateMeasure::normalized(w)
}

/// A pair measure charging every edge with independent random weights; its
/// marginals almost surely differ.
pub fn pair_measure(rng: &mut ChaCha8Rng, t: &FiniteCorrespondence) -> PairMeasure {
    let w = (0..t.n_edges()).map(|_| rng.gen_range(0.05..1.0)).collect();
    PairMeasure::normalized(t, w).expect("positive mass")
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut theta: Vec<usize> = (0..n).collect();
    theta.shuffle(rng);
    theta
}

/// `q` transported along `theta` onto `s`, the relabeled relation.
pub fn relabel_kernel(
    q: &TransitionKernel,
    s: &FiniteCorrespondence,
    theta: &[usize],
) -> Result<TransitionKernel> {
    let mut rows = vec![Vec::new(); q.n_states()];
    for i in 0..q.n_states() {
        rows[theta[i]] = q.row(i).map(|(j, p)| (theta[j], p)).collect();
    }
    TransitionKernel::from_rows(s, &rows)
}

pub fn relabel_measure(mu: &StateMeasure, theta: &[usize]) -> StateMeasure {
    let mut w = vec![0.0; mu.len()];
    for (i, &x) in mu.weights().iter().enumerate() {
        w[theta[i]] = x;
    }
    StateMeasure::normalized(w).expect("same mass")
}

/// A relation with 2 to 4 consecutive blocks of 1 to `block_max` states. Each
/// block is internally a random relation; extra edges only run from a block
/// to later ones, so the blocks form a valid decomposition.
pub fn block_relation(
    rng: &mut ChaCha8Rng,
    block_max: usize,
) -> (FiniteCorrespondence, Vec<Block>) {
    let count = rng.gen_range(2..=4);
    let mut blocks = Vec::new();
    let mut edges = Vec::new();
    let mut offset = 0;
    for _ in 0..count {
        let inner = relation(rng, block_max);
        edges.extend(inner.edges().iter().map(|&(i, j)| (offset + i, offset + j)));
        blocks.push((offset..offset + inner.n_states()).collect::<Vec<_>>());
        offset += inner.n_states();
    }
    for b in 0..count {
        for &x in &blocks[b] {
            for later in &blocks[b + 1..] {
                for &y in later {
                    if rng.gen_bool(0.15) {
                        edges.push((x, y));
                    }
                }
            }
        }
    }
    let t = FiniteCorrespondence::new(offset, &edges).expect("blocks have successors");
    (t, blocks.into_iter().map(Block::new).collect())
}

/// A relation assembled from graphs of maps and of inverses of bijections on
/// consecutive blocks, joined by a few edges into later blocks. At most
/// `edge_max` edges.
pub fn map_class_relation(
    rng: &mut ChaCha8Rng,
    edge_max: usize,
) -> (FiniteCorrespondence, Vec<Block>) {
    loop {
        let count = rng.gen_range(2..=3);
        let mut blocks = Vec::new();
        let mut edges = Vec::new();
        let mut offset = 0;
        for _ in 0..count {
            let n = rng.gen_range(1..=4);
            let inner = if rng.gen_bool(0.5) {
                let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                from_map(n, &f, MapDirection::Forward)
            } else {
                from_map(n, &permutation(rng, n), MapDirection::Inverse)
            }
            .expect("valid map");
            edges.extend(inner.edges().iter().map(|&(i, j)| (offset + i, offset + j)));
            blocks.push((offset..offset + n).collect::<Vec<_>>());
            offset += n;
        }
        for b in 0..count {
            for later in &blocks[b + 1..] {
                let x = *blocks[b].choose(rng).expect("nonempty");
                let y = *later.choose(rng).expect("nonempty");
                edges.push((x, y));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        if edges.len() <= edge_max {
            let t = FiniteCorrespondence::new(offset, &edges).expect("maps are total");
            return (t, blocks.into_iter().map(Block::new).collect());
        }
    }
}
