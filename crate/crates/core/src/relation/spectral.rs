use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::{FiniteCorrespondence, Potential};
use crate::error::{Error, Result};

/// Classes whose pressures differ from the maximum by at most this are tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 100_000;
const RELATIVE_BRACKET: f64 = 1e-13;
const STALL_WINDOW: usize = 2_000;
const STALL_ACCEPT: f64 = 1e-10;
const BALANCE_SWEEPS: usize = 200;
const BALANCE_TOLERANCE: f64 = 1e-3;

/// Strongly connected components of the relation graph, each sorted, ordered
/// by smallest member. Component ids used elsewhere index into this list.
pub fn strongly_connected_components(t: &FiniteCorrespondence) -> Vec<Vec<usize>> {
    components_of(t.n_states(), t.edges())
}

pub(crate) fn components_of(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(n, edges.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for &(i, j) in edges {
        g.add_edge(nodes[i], nodes[j], ());
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Perron data of one irreducible block of the weighted matrix
/// `M_ij = exp(w_ij)`. Vectors are indexed by global state and vanish
/// outside the block; `left · right = 1` and `max(right) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronPair {
    pub log_rho: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub iterations: usize,
}

/// Result of [`spectral_pressure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPressure {
    pub pressure: f64,
    /// Strongly connected components (see [`strongly_connected_components`]).
    pub components: Vec<Vec<usize>>,
    /// `(component id, log spectral radius)` for every component carrying a cycle.
    pub class_pressures: Vec<(usize, f64)>,
    /// Component ids within [`TIE_TOLERANCE`] of the maximum, ascending.
    pub dominant_classes: Vec<usize>,
}

impl SpectralPressure {
    pub fn is_unique(&self) -> bool {
        self.dominant_classes.len() == 1
    }
}

/// `P(T, φ) = log ρ(M)` with `M_ij = e^{φ(i,j)}` on edges, computed as the
/// maximum over strongly connected components of the per-component radius.
pub fn spectral_pressure(t: &FiniteCorrespondence, phi: &Potential) -> Result<SpectralPressure> {
    phi.check(t)?;
    weighted_spectral(t.n_states(), t.edges(), phi.values())
}

pub(crate) fn weighted_spectral(
    n: usize,
    edges: &[(usize, usize)],
    log_w: &[f64],
) -> Result<SpectralPressure> {
    let components = components_of(n, edges);
    let mut class_pressures = Vec::new();
    for (cid, comp) in components.iter().enumerate() {
        if !is_cyclic(comp, edges) {
            continue;
        }
        let pair = perron_on(n, edges, log_w, comp, None)?;
        class_pressures.push((cid, pair.log_rho));
    }
    let pressure = class_pressures
        .iter()
        .map(|&(_, p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    let dominant_classes = class_pressures
        .iter()
        .filter(|&&(_, p)| p >= pressure - TIE_TOLERANCE)
        .map(|&(c, _)| c)
        .collect();
    Ok(SpectralPressure {
        pressure,
        components,
        class_pressures,
        dominant_classes,
    })
}

pub(crate) fn is_cyclic(comp: &[usize], edges: &[(usize, usize)]) -> bool {
    comp.len() > 1 || edges.iter().any(|&(i, j)| i == comp[0] && j == comp[0])
}

/// Perron vectors of the block of `(T, φ)` on `component`.
pub fn perron_pair(
    t: &FiniteCorrespondence,
    phi: &Potential,
    component: &[usize],
) -> Result<PerronPair> {
    phi.check(t)?;
    perron_on(t.n_states(), t.edges(), phi.values(), component, None)
}

/// Shifted power iteration on one irreducible block.
///
/// The block is balanced by a diagonal similarity, scaled by its largest row
/// sum and shifted by the identity, which makes it primitive with the same
/// Perron vectors whatever the period.
/// Convergence is judged on the Collatz-Wielandt bracket
/// `min (Mx)_i / x_i <= ρ <= max (Mx)_i / x_i`.
pub(crate) fn perron_on(
    n: usize,
    edges: &[(usize, usize)],
    log_w: &[f64],
    component: &[usize],
    warm: Option<(&[f64], &[f64])>,
) -> Result<PerronPair> {
    let mut local = vec![usize::MAX; n];
    for (k, &s) in component.iter().enumerate() {
        local[s] = k;
    }
    let mut block: Vec<(usize, usize, f64)> = Vec::new();
    for (&(i, j), &w) in edges.iter().zip(log_w) {
        if local[i] != usize::MAX && local[j] != usize::MAX {
            block.push((local[i], local[j], w));
        }
    }
    let m = component.len();
    if block.is_empty() {
        return Err(Error::InvalidInput("component carries no cycle".into()));
    }
    // diagonal similarity D M D^{-1}, D = diag(e^g), evens out row sums
    let g = balance(m, &block);
    let balanced: Vec<(usize, usize, f64)> =
        block.iter().map(|&(i, j, w)| (i, j, w + g[i] - g[j])).collect();
    let w_max = balanced.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<(usize, usize, f64)> = balanced
        .iter()
        .map(|&(i, j, w)| (i, j, (w - w_max).exp()))
        .collect();
    let transposed: Vec<(usize, usize, f64)> = scaled.iter().map(|&(i, j, w)| (j, i, w)).collect();

    let pick = |v: Option<&[f64]>, sign: f64| -> Vec<f64> {
        let fallback = vec![1.0; m];
        let Some(v) = v else { return fallback };
        let x: Vec<f64> = component
            .iter()
            .enumerate()
            .map(|(k, &s)| v[s] * (sign * g[k]).exp())
            .collect();
        if x.iter().all(|&a| a > 0.0 && a.is_finite()) {
            x
        } else {
            fallback
        }
    };
    let (x, rho_r, it_r) = power_iterate(m, &scaled, pick(warm.map(|w| w.0), 1.0))?;
    let (y, _, it_l) = power_iterate(m, &transposed, pick(warm.map(|w| w.1), -1.0))?;

    let mut right: Vec<f64> = x.iter().zip(&g).map(|(a, gk)| a * (-gk).exp()).collect();
    let top = right.iter().cloned().fold(0.0, f64::max);
    for v in &mut right {
        *v /= top;
    }
    let mut left: Vec<f64> = y.iter().zip(&g).map(|(a, gk)| a * gk.exp()).collect();
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    for v in &mut left {
        *v /= dot;
    }
    let mut right_g = vec![0.0; n];
    let mut left_g = vec![0.0; n];
    for (k, &s) in component.iter().enumerate() {
        right_g[s] = right[k];
        left_g[s] = left[k];
    }
    Ok(PerronPair {
        log_rho: w_max + rho_r.ln(),
        right: right_g,
        left: left_g,
        iterations: it_r + it_l,
    })
}

/// Log-domain Osborne sweeps: `g` such that the off-diagonal row and column
/// sums of `w_ij + g_i − g_j` roughly agree.
fn balance(m: usize, block: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut g = vec![0.0; m];
    if m == 1 {
        return g;
    }
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut inc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(i, j, w) in block {
        if i != j {
            out[i].push((j, w));
            inc[j].push((i, w));
        }
    }
    for _ in 0..BALANCE_SWEEPS {
        let mut moved: f64 = 0.0;
        for i in 0..m {
            let row = logsumexp(out[i].iter().map(|&(j, w)| w - g[j]));
            let col = logsumexp(inc[i].iter().map(|&(j, w)| w + g[j]));
            if row.is_finite() && col.is_finite() {
                let next = 0.5 * (col - row);
                moved = moved.max((next - g[i]).abs());
                g[i] = next;
            }
        }
        if moved < BALANCE_TOLERANCE {
            break;
        }
    }
    g
}

fn multiply(m: usize, entries: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m];
    for &(i, j, w) in entries {
        y[i] += w * x[j];
    }
    y
}

/// Returns the positive eigenvector (max-normalized), the radius, and the
/// number of iterations.
fn power_iterate(
    m: usize,
    entries: &[(usize, usize, f64)],
    mut x: Vec<f64>,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut row_sum = vec![0.0; m];
    for &(i, _, w) in entries {
        row_sum[i] += w;
    }
    let shift = row_sum.iter().cloned().fold(0.0, f64::max);
    normalize_max(&mut x);

    let mut best_width = f64::INFINITY;
    let mut best_at = 0;
    for it in 0..MAX_ITERATIONS {
        let y = multiply(m, entries, &x);
        let (lo, hi) = bracket(&y, &x);
        let width = hi - lo;
        if width <= RELATIVE_BRACKET * hi {
            return Ok((x, 0.5 * (lo + hi), it + 1));
        }
        if width < best_width * 0.999 {
            best_width = width;
            best_at = it;
        } else if it - best_at > STALL_WINDOW && width <= STALL_ACCEPT * hi {
            return Ok((x, 0.5 * (lo + hi), it + 1));
        }
        let mut z: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi / shift + xi).collect();
        normalize_max(&mut z);
        x = z;
    }
    Err(Error::ConvergenceFailure(MAX_ITERATIONS))
}

fn bracket(y: &[f64], x: &[f64]) -> (f64, f64) {
    y.iter()
        .zip(x)
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}

fn normalize_max(x: &mut [f64]) {
    let m = x.iter().cloned().fold(0.0, f64::max);
    for v in x.iter_mut() {
        *v /= m;
    }
}

/// `a_n = (1/n) log Σ_{paths of length n+1} e^{S_n φ}` for `n = 1..=n_max`,
/// by the log-domain forward recursion `v_{k+1}(j) = logsumexp_i (v_k(i) + φ(i,j))`.
pub fn path_pressure_sequence(
    t: &FiniteCorrespondence,
    phi: &Potential,
    n_max: usize,
) -> Result<Vec<f64>> {
    phi.check(t)?;
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let n = t.n_states();
    let mut v = vec![0.0_f64; n];
    let mut out = Vec::with_capacity(n_max);
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (id, &(i, j)) in t.edges().iter().enumerate() {
        incoming[j].push((i, phi.get(id)));
    }
    for step in 1..=n_max {
        let next: Vec<f64> = incoming
            .iter()
            .map(|inc| logsumexp(inc.iter().map(|&(i, w)| v[i] + w)))
            .collect();
        v = next;
        out.push(logsumexp(v.iter().copied()) / step as f64);
    }
    Ok(out)
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn full2() -> FiniteCorrespondence {
        FiniteCorrespondence::new(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
    }

    fn golden() -> FiniteCorrespondence {
        FiniteCorrespondence::new(2, &[(0, 0), (0, 1), (1, 0)]).unwrap()
    }

    const LOG_GOLDEN: f64 = 0.481_211_825_059_603_4;

    #[test]
    fn full_shift_pressure() {
        let t = full2();
        let sp = spectral_pressure(&t, &Potential::zero(&t)).unwrap();
        assert_abs_diff_eq!(sp.pressure, std::f64::consts::LN_2, epsilon = 1e-13);
        assert_eq!(sp.dominant_classes, vec![0]);
    }

    #[test]
    fn disjoint_loops_pick_the_heavier() {
        let t = FiniteCorrespondence::new(2, &[(0, 0), (1, 1)]).unwrap();
        let phi = Potential::from_triples(&t, &[(0, 0, 0.3), (1, 1, 0.7)]).unwrap();
        let sp = spectral_pressure(&t, &phi).unwrap();
        assert_abs_diff_eq!(sp.pressure, 0.7, epsilon = 1e-13);
        assert_eq!(sp.components, vec![vec![0], vec![1]]);
        assert_eq!(sp.dominant_classes, vec![1]);
    }

    #[test]
    fn golden_mean_radius() {
        let t = golden();
        let sp = spectral_pressure(&t, &Potential::zero(&t)).unwrap();
        assert_abs_diff_eq!(sp.pressure, LOG_GOLDEN, epsilon = 1e-13);
    }

    #[test]
    fn periodic_block_converges() {
        // a 3-cycle has period 3; plain power iteration would oscillate
        let t = FiniteCorrespondence::new(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let phi = Potential::from_triples(&t, &[(0, 1, 0.9), (1, 2, -0.3)]).unwrap();
        let sp = spectral_pressure(&t, &phi).unwrap();
        assert_abs_diff_eq!(sp.pressure, 0.2, epsilon = 1e-13);
    }

    #[test]
    fn transient_states_do_not_count() {
        // 0 -> 1 only, 1 has a self loop; 0 is a singleton class without cycle
        let t = FiniteCorrespondence::new(2, &[(0, 1), (1, 1)]).unwrap();
        let sp = spectral_pressure(&t, &Potential::constant(&t, 3.0)).unwrap();
        assert_abs_diff_eq!(sp.pressure, 3.0, epsilon = 1e-13);
        assert_eq!(sp.class_pressures.len(), 1);
    }

    #[test]
    fn perron_vectors_are_eigenvectors() {
        let t = golden();
        let phi = Potential::from_triples(&t, &[(0, 0, 0.2), (0, 1, -0.4), (1, 0, 0.1)]).unwrap();
        let pair = perron_pair(&t, &phi, &[0, 1]).unwrap();
        let rho = pair.log_rho.exp();
        for i in 0..2 {
            let mut mr = 0.0;
            let mut lm = 0.0;
            for (id, &(a, b)) in t.edges().iter().enumerate() {
                let w = phi.get(id).exp();
                if a == i {
                    mr += w * pair.right[b];
                }
                if b == i {
                    lm += pair.left[a] * w;
                }
            }
            assert_abs_diff_eq!(mr, rho * pair.right[i], epsilon = 1e-12);
            assert_abs_diff_eq!(lm, rho * pair.left[i], epsilon = 1e-12);
        }
        let dot: f64 = pair.left.iter().zip(&pair.right).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(dot, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn path_sequence_examples() {
        let t = full2();
        let a = path_pressure_sequence(&t, &Potential::zero(&t), 10).unwrap();
        for (k, v) in a.iter().enumerate() {
            let n = (k + 1) as f64;
            assert_abs_diff_eq!(*v, (n + 1.0) * 2f64.ln() / n, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(a[9], 0.762_461_898_615_94, epsilon = 1e-12);

        let one = FiniteCorrespondence::new(1, &[(0, 0)]).unwrap();
        let a = path_pressure_sequence(&one, &Potential::constant(&one, -1.7), 5).unwrap();
        assert!(a.iter().all(|v| (v + 1.7).abs() < 1e-14));
    }

    #[test]
    fn golden_path_counts_are_fibonacci() {
        // brute-force enumeration of all paths for n <= 25
        let t = golden();
        let a = path_pressure_sequence(&t, &Potential::zero(&t), 25).unwrap();
        let mut counts = [1u64, 1u64]; // paths of length 1 ending in 0 / 1
        for (k, an) in a.iter().enumerate() {
            counts = [counts[0] + counts[1], counts[0]];
            let total = (counts[0] + counts[1]) as f64;
            assert_abs_diff_eq!(*an, total.ln() / (k + 1) as f64, epsilon = 1e-12);
        }
        assert!((a[24] - LOG_GOLDEN).abs() < 0.05);
    }
}
