//! Finite correspondences (closed relations on a finite state space), edge
//! potentials, orbits, and the pressure computations built on them.
//!
//! The state space carries the discrete metric, so for any separation scale
//! below 1 every set of distinct orbits is separated and only the full orbit
//! set spans. Pressure then reduces to the growth rate of the weighted orbit
//! sum, which is what [`path_pressure_sequence`] and [`spectral_pressure`]
//! compute by two independent routes.

mod decomposition;
pub(crate) mod spectral;

pub use decomposition::{
    decomposition_pressure, decomposition_validate, Block, DecompositionFailure,
    DecompositionReport,
};
pub use spectral::{
    path_pressure_sequence, perron_pair, spectral_pressure, strongly_connected_components,
    PerronPair, SpectralPressure, TIE_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed relation on `n_states` points in which every state has a successor.
///
/// Edges are stored sorted lexicographically; an edge's position in that order
/// is its edge id, which indexes [`Potential`] values and pair measures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteCorrespondence {
    n_states: usize,
    edges: Vec<(usize, usize)>,
    row_start: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl FiniteCorrespondence {
    /// Checks the edge list and builds the correspondence.
    pub fn new(n_states: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        validate_correspondence(n_states, edge_list)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_states {
            return Err(Error::ShapeMismatch {
                expected: self.n_states,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Edge ids of the edges leaving `i`.
    pub fn out_edge_ids(&self, i: usize) -> std::ops::Range<usize> {
        self.row_start[i]..self.row_start[i + 1]
    }

    /// Successor set `T(i)`, sorted.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[self.out_edge_ids(i)].iter().map(|&(_, j)| j)
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n_states {
            return None;
        }
        let range = self.out_edge_ids(i);
        self.edges[range.clone()]
            .binary_search_by_key(&j, |&(_, t)| t)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edge_id(i, j).is_some()
    }

    /// True iff every state has a predecessor, i.e. `T(X) = X`.
    pub fn is_surjective(&self) -> bool {
        self.first_without_predecessor().is_none()
    }

    fn first_without_predecessor(&self) -> Option<usize> {
        let mut hit = vec![false; self.n_states];
        for &(_, j) in &self.edges {
            hit[j] = true;
        }
        hit.iter().position(|h| !h)
    }

    /// `T^{-1}(A) = {x : T(x) ∩ A ≠ ∅}` for a set given as a membership mask.
    pub fn preimage(&self, set: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.n_states];
        for &(i, j) in &self.edges {
            if set[j] {
                out[i] = true;
            }
        }
        out
    }

    /// The sub-relation induced on `states`, re-indexed by position in `states`.
    ///
    /// Fails with [`Error::EmptySuccessor`] (local index) if some state of the
    /// block has no successor inside the block.
    pub fn induced(&self, states: &[usize]) -> Result<(FiniteCorrespondence, Vec<usize>)> {
        let mut local = vec![usize::MAX; self.n_states];
        for (k, &s) in states.iter().enumerate() {
            if s >= self.n_states {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    n_states: self.n_states,
                });
            }
            local[s] = k;
        }
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for (id, &(i, j)) in self.edges.iter().enumerate() {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                edges.push((local[i], local[j]));
                edge_map.push(id);
            }
        }
        let sub = validate_correspondence(states.len(), &edges)?;
        // `validate_correspondence` sorts edges; realign the id map.
        let mut ids = vec![0; edges.len()];
        for (k, &(i, j)) in edges.iter().enumerate() {
            ids[sub.edge_id(i, j).expect("edge present")] = edge_map[k];
        }
        Ok((sub, ids))
    }
}

/// Checks an edge list against the correspondence rules.
///
/// Out-of-range indices are reported first, then duplicate edges, then states
/// with an empty successor set.
pub fn validate_correspondence(
    n_states: usize,
    edge_list: &[(usize, usize)],
) -> Result<FiniteCorrespondence> {
    if n_states == 0 {
        return Err(Error::NoStates);
    }
    for &(i, j) in edge_list {
        for index in [i, j] {
            if index >= n_states {
                return Err(Error::IndexOutOfRange { index, n_states });
            }
        }
    }
    let mut edges = edge_list.to_vec();
    edges.sort_unstable();
    if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateEdge(w[0].0, w[0].1));
    }
    let mut row_start = vec![0; n_states + 1];
    for &(i, _) in &edges {
        row_start[i + 1] += 1;
    }
    for i in 0..n_states {
        if row_start[i + 1] == 0 {
            return Err(Error::EmptySuccessor(i));
        }
        row_start[i + 1] += row_start[i];
    }
    Ok(FiniteCorrespondence {
        n_states,
        edges,
        row_start,
        labels: None,
    })
}

/// Which graph [`from_map`] builds from a self-map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapDirection {
    /// `{(x, f(x))}`
    Forward,
    /// `{(f(x), x)}`, requires `f` onto.
    Inverse,
}

/// The graph correspondence of a map, or of its inverse.
pub fn from_map(
    n_states: usize,
    successor: &[usize],
    direction: MapDirection,
) -> Result<FiniteCorrespondence> {
    if successor.len() != n_states {
        return Err(Error::ShapeMismatch {
            expected: n_states,
            found: successor.len(),
        });
    }
    let graph: Vec<(usize, usize)> = successor.iter().copied().enumerate().collect();
    match direction {
        MapDirection::Forward => validate_correspondence(n_states, &graph),
        MapDirection::Inverse => {
            for &(_, y) in &graph {
                if y >= n_states {
                    return Err(Error::IndexOutOfRange { index: y, n_states });
                }
            }
            let mut hit = vec![false; n_states];
            for &y in successor {
                hit[y] = true;
            }
            if let Some(missing) = hit.iter().position(|h| !h) {
                return Err(Error::NotSurjective(missing));
            }
            let transposed: Vec<(usize, usize)> = graph.iter().map(|&(x, y)| (y, x)).collect();
            validate_correspondence(n_states, &transposed)
        }
    }
}

/// The transpose relation `T^{-1}`; defined when `T` is onto.
pub fn inverse_correspondence(t: &FiniteCorrespondence) -> Result<FiniteCorrespondence> {
    if let Some(missing) = t.first_without_predecessor() {
        return Err(Error::NotSurjective(missing));
    }
    let transposed: Vec<(usize, usize)> = t.edges.iter().map(|&(i, j)| (j, i)).collect();
    let mut inv = validate_correspondence(t.n_states, &transposed)?;
    inv.labels = t.labels.clone();
    Ok(inv)
}

/// Real values on the edges of a correspondence, indexed by edge id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn zero(t: &FiniteCorrespondence) -> Self {
        Potential {
            values: vec![0.0; t.n_edges()],
        }
    }

    pub fn constant(t: &FiniteCorrespondence, c: f64) -> Self {
        Potential {
            values: vec![c; t.n_edges()],
        }
    }

    pub fn from_fn(t: &FiniteCorrespondence, f: impl Fn(usize, usize) -> f64) -> Self {
        Potential {
            values: t.edges().iter().map(|&(i, j)| f(i, j)).collect(),
        }
    }

    /// Values listed in edge-id order.
    pub fn from_values(t: &FiniteCorrespondence, values: Vec<f64>) -> Result<Self> {
        if values.len() != t.n_edges() {
            return Err(Error::ShapeMismatch {
                expected: t.n_edges(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("potential value {v} is not finite")));
        }
        Ok(Potential { values })
    }

    /// Sparse `(i, j, value)` triples; unlisted edges get 0.
    pub fn from_triples(t: &FiniteCorrespondence, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; t.n_edges()];
        let mut set = vec![false; t.n_edges()];
        for &(i, j, v) in triples {
            let id = t.edge_id(i, j).ok_or_else(|| {
                Error::InvalidInput(format!("potential given on ({i}, {j}), which is not an edge"))
            })?;
            if set[id] {
                return Err(Error::DuplicateEdge(i, j));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("potential value {v} is not finite")));
            }
            set[id] = true;
            values[id] = v;
        }
        Ok(Potential { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, edge_id: usize) -> f64 {
        self.values[edge_id]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + s * other`, edgewise.
    pub fn add_scaled(&self, other: &Potential, s: f64) -> Potential {
        Potential {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Potential {
        Potential {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + ψ∘π₁ − ψ∘π₂` for a state function `ψ`.
    pub fn plus_coboundary(&self, t: &FiniteCorrespondence, psi: &[f64]) -> Potential {
        Potential {
            values: t
                .edges()
                .iter()
                .zip(&self.values)
                .map(|(&(i, j), v)| v + psi[i] - psi[j])
                .collect(),
        }
    }

    /// `φ∘γ₂` on the transpose relation: the value at `(j, i)` is `φ(i, j)`.
    pub fn reversed(&self, t: &FiniteCorrespondence, inv: &FiniteCorrespondence) -> Potential {
        let mut values = vec![0.0; inv.n_edges()];
        for (id, &(i, j)) in t.edges().iter().enumerate() {
            values[inv.edge_id(j, i).expect("transpose edge")] = self.values[id];
        }
        Potential { values }
    }

    pub(crate) fn check(&self, t: &FiniteCorrespondence) -> Result<()> {
        if self.values.len() != t.n_edges() {
            return Err(Error::ShapeMismatch {
                expected: t.n_edges(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

/// An orbit `(x_1, ..., x_{n+1})`: consecutive states are edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(t: &FiniteCorrespondence, states: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= t.n_states()) {
            return Err(Error::IndexOutOfRange {
                index: s,
                n_states: t.n_states(),
            });
        }
        if let Some(w) = states.windows(2).find(|w| !t.contains(w[0], w[1])) {
            return Err(Error::InvalidPath(format!("({}, {}) is not an edge", w[0], w[1])));
        }
        Ok(Path(states))
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `S_n φ(x_1, ..., x_{n+1}) = Σ φ(x_k, x_{k+1})`.
pub fn birkhoff_sum(t: &FiniteCorrespondence, phi: &Potential, path: &Path) -> Result<f64> {
    phi.check(t)?;
    if path.len() < 2 {
        return Err(Error::InvalidPath("a Birkhoff sum needs at least one step".into()));
    }
    path.states()
        .windows(2)
        .map(|w| {
            t.edge_id(w[0], w[1])
                .map(|id| phi.get(id))
                .ok_or_else(|| Error::InvalidPath(format!("({}, {}) is not an edge", w[0], w[1])))
        })
        .sum()
}

/// Transports `(T, φ)` along a state bijection: `S = {(θi, θj)}`, `ψ(θi, θj) = φ(i, j)`.
pub fn relabel(
    t: &FiniteCorrespondence,
    phi: &Potential,
    theta: &[usize],
) -> Result<(FiniteCorrespondence, Potential)> {
    phi.check(t)?;
    check_bijection(theta, t.n_states())?;
    let edges: Vec<(usize, usize)> = t.edges().iter().map(|&(i, j)| (theta[i], theta[j])).collect();
    let mut s = validate_correspondence(t.n_states(), &edges)?;
    if let Some(labels) = t.labels() {
        let mut moved = vec![String::new(); labels.len()];
        for (i, l) in labels.iter().enumerate() {
            moved[theta[i]] = l.clone();
        }
        s.labels = Some(moved);
    }
    let mut values = vec![0.0; s.n_edges()];
    for (id, &(i, j)) in t.edges().iter().enumerate() {
        values[s.edge_id(theta[i], theta[j]).expect("relabeled edge")] = phi.get(id);
    }
    Ok((s, Potential { values }))
}

pub(crate) fn check_bijection(theta: &[usize], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::NotBijective);
    }
    let mut hit = vec![false; n];
    for &x in theta {
        if x >= n || hit[x] {
            return Err(Error::NotBijective);
        }
        hit[x] = true;
    }
    Ok(())
}
