//! Piecewise-linear interval correspondences and their finite models.
//!
//! All interval arithmetic is exact over `BigRational`; floating point only
//! enters when a pressure is computed.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{
    decomposition_pressure, decomposition_validate, spectral_pressure, Block,
    FiniteCorrespondence, Potential,
};
use crate::variational::gibbs_equilibrium;

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// One affine piece `x ↦ slope·x + intercept`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub slope: BigRational,
    pub intercept: BigRational,
}

impl Piece {
    pub fn new(slope: BigRational, intercept: BigRational) -> Self {
        Piece { slope, intercept }
    }

    fn at(&self, x: &BigRational) -> BigRational {
        &self.slope * x + &self.intercept
    }
}

/// A continuous piecewise-linear map on `[b_0, b_k]` with values in `[0, 1]`.
/// Piece `i` lives on `[b_i, b_{i+1}]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearMap {
    breakpoints: Vec<BigRational>,
    pieces: Vec<Piece>,
}

impl PiecewiseLinearMap {
    pub fn new(breakpoints: Vec<BigRational>, pieces: Vec<Piece>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must increase strictly".into()));
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        if breakpoints[0] < zero || breakpoints[breakpoints.len() - 1] > one {
            return Err(Error::InvalidInput("breakpoints must lie in [0, 1]".into()));
        }
        for (k, piece) in pieces.iter().enumerate() {
            for x in [&breakpoints[k], &breakpoints[k + 1]] {
                let y = piece.at(x);
                if y < zero || y > one {
                    return Err(Error::InvalidInput(format!("value {y} at {x} leaves [0, 1]")));
                }
            }
        }
        for k in 1..pieces.len() {
            let x = &breakpoints[k];
            if pieces[k - 1].at(x) != pieces[k].at(x) {
                return Err(Error::InvalidInput(format!("discontinuity at {x}")));
            }
        }
        Ok(PiecewiseLinearMap { breakpoints, pieces })
    }

    /// `(p, q)` integer pairs for breakpoints and `((p, q), (p, q))` for
    /// slope and intercept.
    pub fn from_ints(breakpoints: &[(i64, i64)], pieces: &[((i64, i64), (i64, i64))]) -> Result<Self> {
        PiecewiseLinearMap::new(
            breakpoints.iter().map(|&(p, q)| rat(p, q)).collect(),
            pieces
                .iter()
                .map(|&((sp, sq), (ip, iq))| Piece::new(rat(sp, sq), rat(ip, iq)))
                .collect(),
        )
    }

    pub fn breakpoints(&self) -> &[BigRational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn domain(&self) -> (&BigRational, &BigRational) {
        (&self.breakpoints[0], &self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Index of a piece whose closed interval contains `x`.
    fn piece_at(&self, x: &BigRational) -> Option<usize> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return None;
        }
        Some(
            (0..self.pieces.len())
                .find(|&k| x <= &self.breakpoints[k + 1])
                .expect("x is in the domain"),
        )
    }
}

/// Exact value of the map at `x`.
pub fn pl_eval(map: &PiecewiseLinearMap, x: &BigRational) -> Result<BigRational> {
    let k = map.piece_at(x).ok_or(Error::OutOfDomain)?;
    Ok(map.pieces[k].at(x))
}

/// `T(x) = {f(x) : f a branch}` with every branch defined on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalCorrespondence {
    branches: Vec<PiecewiseLinearMap>,
}

impl IntervalCorrespondence {
    pub fn new(branches: Vec<PiecewiseLinearMap>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidInput("at least one branch is required".into()));
        }
        for b in &branches {
            let (lo, hi) = b.domain();
            if !lo.is_zero() || !hi.is_one() {
                return Err(Error::InvalidInput(format!(
                    "branch domain [{lo}, {hi}] is not [0, 1]"
                )));
            }
        }
        Ok(IntervalCorrespondence { branches })
    }

    pub fn branches(&self) -> &[PiecewiseLinearMap] {
        &self.branches
    }

    pub fn values_at(&self, x: &BigRational) -> Result<Vec<BigRational>> {
        let mut out: Vec<BigRational> = self
            .branches
            .iter()
            .map(|b| pl_eval(b, x))
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// The finite model of an interval correspondence on `N` equal cells
/// `[k/N, (k+1)/N)`, the last one closed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRelation {
    pub resolution: usize,
    pub relation: FiniteCorrespondence,
}

impl GridRelation {
    /// `[k/N, (k+1)/N]` as exact endpoints.
    pub fn cell(&self, k: usize) -> (BigRational, BigRational) {
        let n = self.resolution as i64;
        (rat(k as i64, n), rat(k as i64 + 1, n))
    }

    /// Potential sampled at cell-centre pairs: `φ(i, j) = f(c_i, c_j)`.
    pub fn sample_potential(&self, f: impl Fn(f64, f64) -> f64) -> Potential {
        let n = self.resolution as f64;
        Potential::from_fn(&self.relation, |i, j| {
            f((i as f64 + 0.5) / n, (j as f64 + 0.5) / n)
        })
    }
}

fn check_resolution(n: usize, min: usize) -> Result<()> {
    if n < min || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "resolution must be a power of two at least {min}, got {n}"
        )));
    }
    Ok(())
}

/// Discretizes `T` on `N` cells: cell `i → j` iff some branch maps cell `i`
/// onto a set meeting the interior of cell `j`.
///
/// Images of cells are intervals of positive length, so touching a cell at a
/// single endpoint never creates an edge. Branches constant on a cell are
/// rejected.
pub fn grid_discretize(t: &IntervalCorrespondence, n: usize) -> Result<GridRelation> {
    check_resolution(n, 4)?;
    let scale = BigRational::from_integer(BigInt::from(n));
    for b in &t.branches {
        for x in &b.breakpoints {
            if !(x * &scale).is_integer() {
                return Err(Error::MisalignedBreakpoints(format!(
                    "breakpoint {x} is not a multiple of 1/{n}"
                )));
            }
        }
    }
    let mut edges = Vec::new();
    for k in 0..n {
        let lo = rat(k as i64, n as i64);
        let hi = rat(k as i64 + 1, n as i64);
        let mid = (&lo + &hi) / rat(2, 1);
        for b in &t.branches {
            // aligned breakpoints put the whole cell inside one piece
            let piece = &b.pieces[b.piece_at(&mid).expect("domain is [0, 1]")];
            if piece.slope.is_zero() {
                return Err(Error::DegenerateCell(format!(
                    "a branch is constant on cell {k}"
                )));
            }
            let (a, z) = {
                let (u, v) = (piece.at(&lo), piece.at(&hi));
                if u < v {
                    (u, v)
                } else {
                    (v, u)
                }
            };
            // cells j with (j/N, (j+1)/N) ∩ (a, z) ≠ ∅
            let first = (&a * &scale).floor().to_integer();
            let last = (&z * &scale).ceil().to_integer() - BigInt::one();
            let first = first.to_usize().unwrap_or(0).min(n - 1);
            let last = last.to_usize().unwrap_or(0).min(n - 1);
            for j in first..=last {
                edges.push((k, j));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(GridRelation {
        resolution: n,
        relation: FiniteCorrespondence::new(n, &edges)?,
    })
}

/// Finite model of a Markov map: cell `i → j` iff `f(cell i) ⊇ cell j`,
/// with the topological entropy `log ρ` of that 0/1 matrix.
///
/// `partition` lists the cell endpoints and must span the map's domain. The
/// map must be monotone on each cell and carry it onto a union of cells.
pub fn markov_model(
    map: &PiecewiseLinearMap,
    partition: &[BigRational],
) -> Result<(FiniteCorrespondence, f64)> {
    let (lo, hi) = map.domain();
    if partition.len() < 2
        || &partition[0] != lo
        || &partition[partition.len() - 1] != hi
        || partition.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::NotMarkov(format!(
            "partition must increase from {lo} to {hi}"
        )));
    }
    let cells = partition.len() - 1;
    let mut edges = Vec::new();
    for k in 0..cells {
        let (a, b) = (&partition[k], &partition[k + 1]);
        if map.breakpoints.iter().any(|x| x > a && x < b) {
            return Err(Error::NotMarkov(format!(
                "cell [{a}, {b}] contains a breakpoint"
            )));
        }
        let (u, v) = (pl_eval(map, a)?, pl_eval(map, b)?);
        let (y0, y1) = if u < v { (u, v) } else { (v, u) };
        if y0 == y1 {
            return Err(Error::NotMarkov(format!("cell [{a}, {b}] collapses to a point")));
        }
        let start = partition.iter().position(|p| p == &y0);
        let end = partition.iter().position(|p| p == &y1);
        let (Some(s), Some(e)) = (start, end) else {
            return Err(Error::NotMarkov(format!(
                "image [{y0}, {y1}] of cell [{a}, {b}] is not a union of cells"
            )));
        };
        edges.extend((s..e).map(|j| (k, j)));
    }
    let t = FiniteCorrespondence::new(cells, &edges)?;
    let p = spectral_pressure(&t, &Potential::zero(&t))?.pressure;
    Ok((t, p))
}

/// The maps of the worked example: `T = {f, g}` on `[0, 1]`, and the maps
/// `h₁` on `[0, 1/2]`, `h₂` on `[1/2, 1]` generating its decomposition.
#[derive(Debug, Clone)]
pub struct ExampleMaps {
    pub f: PiecewiseLinearMap,
    pub g: PiecewiseLinearMap,
    pub h1: PiecewiseLinearMap,
    pub h2: PiecewiseLinearMap,
}

/// Name of the built-in fixture.
pub const EXAMPLE_FIXTURE: &str = "lllz-example";

pub fn example_maps() -> ExampleMaps {
    let f = PiecewiseLinearMap::from_ints(
        &[(0, 1), (1, 2), (1, 1)],
        &[((1, 1), (0, 1)), ((1, 2), (1, 4))],
    );
    let g = PiecewiseLinearMap::from_ints(
        &[(0, 1), (1, 4), (1, 2), (1, 1)],
        &[((-2, 1), (1, 1)), ((2, 1), (0, 1)), ((-1, 2), (5, 4))],
    );
    let h1 = PiecewiseLinearMap::from_ints(&[(0, 1), (1, 2)], &[((1, 1), (0, 1))]);
    let h2 = PiecewiseLinearMap::from_ints(
        &[(1, 2), (3, 4), (1, 1)],
        &[((2, 1), (-1, 2)), ((-2, 1), (5, 2))],
    );
    ExampleMaps {
        f: f.expect("valid"),
        g: g.expect("valid"),
        h1: h1.expect("valid"),
        h2: h2.expect("valid"),
    }
}

impl ExampleMaps {
    pub fn correspondence(&self) -> IntervalCorrespondence {
        IntervalCorrespondence::new(vec![self.f.clone(), self.g.clone()]).expect("valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub resolution: usize,
    /// Exact route through the block decomposition `h₁ → h₂⁻¹`.
    pub route_a: f64,
    pub route_a_blocks: Vec<f64>,
    /// `log ρ` of the grid relation.
    pub route_b: f64,
    /// `entropy + integral` of the Gibbs chain on the grid relation.
    pub route_c: f64,
    pub gap_b: f64,
    pub gap_c: f64,
    /// Whether cells in `[0, 1/2)` and `[1/2, 1]` decompose the grid relation.
    pub grid_decomposition_valid: bool,
    /// Route (b) at `8, 16, …, resolution`.
    pub refinement: Vec<(usize, f64)>,
}

/// Runs the three routes to the pressure of the worked example.
pub fn paper_example(n: usize) -> Result<ExampleReport> {
    check_resolution(n, 8)?;
    let maps = example_maps();
    let half = rat(1, 2);
    let one = rat(1, 1);

    // (a) Markov models of h₁ on X₁ and of h₂ on X₂; T acts on X₂ as h₂⁻¹, so
    // that block carries the transpose of h₂'s matrix. g sends X₁ onto X₂.
    let (m1, _) = markov_model(&maps.h1, &[rat(0, 1), half.clone()])?;
    let (m2, _) = markov_model(&maps.h2, &[half.clone(), rat(3, 4), one.clone()])?;
    let off = m1.n_states();
    let mut edges: Vec<(usize, usize)> = m1.edges().to_vec();
    let x2_edges: Vec<(usize, usize)> = m2.edges().iter().map(|&(i, j)| (off + j, off + i)).collect();
    edges.extend(&x2_edges);
    let image_x1 = [rat(0, 1), rat(1, 4), half.clone()]
        .iter()
        .map(|x| pl_eval(&maps.g, x))
        .collect::<Result<Vec<_>>>()?;
    if image_x1.iter().min() != Some(&half) || image_x1.iter().max() != Some(&one) {
        return Err(Error::InvalidInput("g does not carry X₁ onto X₂".into()));
    }
    for i in 0..off {
        edges.extend((0..m2.n_states()).map(|j| (i, off + j)));
    }
    let model = FiniteCorrespondence::new(off + m2.n_states(), &edges)?;
    let blocks = vec![
        Block {
            states: (0..off).collect(),
            declared_edges: Some(m1.edges().to_vec()),
        },
        Block {
            states: (off..model.n_states()).collect(),
            declared_edges: Some(x2_edges),
        },
    ];
    let (route_a, route_a_blocks) =
        decomposition_pressure(&model, &Potential::zero(&model), &blocks)?;

    // (b) and (c) on the grid
    let t = maps.correspondence();
    let mut refinement = Vec::new();
    let mut k = 8;
    while k <= n {
        let grid = grid_discretize(&t, k)?;
        let p = spectral_pressure(&grid.relation, &Potential::zero(&grid.relation))?.pressure;
        refinement.push((k, p));
        k *= 2;
    }
    let route_b = refinement.last().expect("n >= 8").1;
    let grid = grid_discretize(&t, n)?;
    let zero = Potential::zero(&grid.relation);
    let gibbs = gibbs_equilibrium(&grid.relation, &zero)?;
    let route_c = gibbs.entropy + gibbs.integral;
    let grid_blocks = [
        Block::new((0..n / 2).collect()),
        Block::new((n / 2..n).collect()),
    ];
    let grid_decomposition_valid = decomposition_validate(&grid.relation, &grid_blocks).passed;

    let log2 = std::f64::consts::LN_2;
    Ok(ExampleReport {
        resolution: n,
        route_a,
        route_a_blocks,
        route_b,
        route_c,
        gap_b: (route_b - log2).abs(),
        gap_c: (route_c - route_b).abs(),
        grid_decomposition_valid,
        refinement,
    })
}

impl fmt::Display for PiecewiseLinearMap {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.pieces.iter().enumerate() {
            if k > 0 {
                write!(out, "; ")?;
            }
            write!(
                out,
                "[{}, {}]: {}x {} {}",
                self.breakpoints[k],
                self.breakpoints[k + 1],
                p.slope,
                if p.intercept.is_negative() { "-" } else { "+" },
                p.intercept.abs()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_bigint::BigUint;

    #[test]
    fn evaluation_at_the_printed_formulas() {
        let m = example_maps();
        assert_eq!(pl_eval(&m.f, &rat(3, 4)).unwrap(), rat(5, 8));
        assert_eq!(pl_eval(&m.g, &rat(1, 4)).unwrap(), rat(1, 2));
        assert_eq!(pl_eval(&m.h1, &rat(1, 3)).unwrap(), rat(1, 3));
        assert_eq!(pl_eval(&m.h2, &rat(3, 4)).unwrap(), rat(1, 1));
        assert_eq!(pl_eval(&m.h2, &rat(1, 4)), Err(Error::OutOfDomain));
        assert_eq!(pl_eval(&m.f, &rat(5, 4)), Err(Error::OutOfDomain));
    }

    #[test]
    fn construction_checks() {
        // jump at 1/2
        assert!(PiecewiseLinearMap::from_ints(
            &[(0, 1), (1, 2), (1, 1)],
            &[((2, 1), (0, 1)), ((2, 1), (-1, 1))]
        )
        .is_err());
        // leaves [0, 1]
        assert!(PiecewiseLinearMap::from_ints(&[(0, 1), (1, 1)], &[((2, 1), (0, 1))]).is_err());
        let m = example_maps();
        assert!(IntervalCorrespondence::new(vec![m.h2.clone()]).is_err());
        assert!(IntervalCorrespondence::new(vec![]).is_err());
        assert_eq!(
            m.correspondence().values_at(&rat(1, 4)).unwrap(),
            vec![rat(1, 4), rat(1, 2)]
        );
    }

    #[test]
    fn identity_grid() {
        let id = PiecewiseLinearMap::from_ints(&[(0, 1), (1, 1)], &[((1, 1), (0, 1))]).unwrap();
        let g = grid_discretize(&IntervalCorrespondence::new(vec![id]).unwrap(), 4).unwrap();
        assert_eq!(g.relation.edges(), &[(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn tent_grid_spreads_cells() {
        let tent = PiecewiseLinearMap::from_ints(
            &[(0, 1), (1, 2), (1, 1)],
            &[((2, 1), (0, 1)), ((-2, 1), (2, 1))],
        )
        .unwrap();
        let g = grid_discretize(&IntervalCorrespondence::new(vec![tent]).unwrap(), 4).unwrap();
        assert_eq!(g.relation.successors(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(g.relation.successors(3).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn example_grid_at_eight() {
        let g = grid_discretize(&example_maps().correspondence(), 8).unwrap();
        for k in 4..8 {
            let succ: Vec<usize> = g.relation.successors(k).collect();
            assert_eq!(succ.len(), 2, "cell {k}: {succ:?}");
            assert!(succ.iter().all(|&j| j >= 4));
        }
        assert_eq!(g.relation.successors(6).collect::<Vec<_>>(), vec![5, 6]);
        // the identity part of f plus g's spread onto X₂
        assert_eq!(g.relation.successors(0).collect::<Vec<_>>(), vec![0, 6, 7]);
    }

    #[test]
    fn grid_errors() {
        let t = example_maps().correspondence();
        assert!(matches!(grid_discretize(&t, 2), Err(Error::InvalidInput(_))));
        assert!(matches!(grid_discretize(&t, 6), Err(Error::InvalidInput(_))));
        let third = PiecewiseLinearMap::from_ints(
            &[(0, 1), (1, 3), (1, 1)],
            &[((1, 1), (0, 1)), ((1, 1), (0, 1))],
        )
        .unwrap();
        assert!(matches!(
            grid_discretize(&IntervalCorrespondence::new(vec![third]).unwrap(), 4),
            Err(Error::MisalignedBreakpoints(_))
        ));
        let flat = PiecewiseLinearMap::from_ints(
            &[(0, 1), (1, 2), (1, 1)],
            &[((1, 1), (0, 1)), ((0, 1), (1, 2))],
        )
        .unwrap();
        assert!(matches!(
            grid_discretize(&IntervalCorrespondence::new(vec![flat]).unwrap(), 4),
            Err(Error::DegenerateCell(_))
        ));
    }

    #[test]
    fn markov_models() {
        let m = example_maps();
        let (t, p) = markov_model(&m.h2, &[rat(1, 2), rat(3, 4), rat(1, 1)]).unwrap();
        assert_eq!(t.n_edges(), 4);
        assert_abs_diff_eq!(p, std::f64::consts::LN_2, epsilon = 1e-12);
        let (_, p) = markov_model(&m.h1, &[rat(0, 1), rat(1, 2)]).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
        let tent = PiecewiseLinearMap::from_ints(
            &[(0, 1), (1, 2), (1, 1)],
            &[((2, 1), (0, 1)), ((-2, 1), (2, 1))],
        )
        .unwrap();
        let (_, p) = markov_model(&tent, &[rat(0, 1), rat(1, 2), rat(1, 1)]).unwrap();
        assert_abs_diff_eq!(p, std::f64::consts::LN_2, epsilon = 1e-12);
        assert!(matches!(
            markov_model(&tent, &[rat(0, 1), rat(1, 3), rat(1, 1)]),
            Err(Error::NotMarkov(_))
        ));
        assert!(matches!(
            markov_model(&m.h2, &[rat(1, 2), rat(1, 1)]),
            Err(Error::NotMarkov(_))
        ));
    }

    /// `(1/n) log #{paths with n transitions}` by exact counting.
    fn path_count_rate(t: &FiniteCorrespondence, steps: usize) -> f64 {
        let mut counts = vec![BigUint::one(); t.n_states()];
        for _ in 0..steps {
            let mut next = vec![BigUint::zero(); t.n_states()];
            for &(i, j) in t.edges() {
                next[j] += &counts[i];
            }
            counts = next;
        }
        let total: BigUint = counts.iter().sum();
        let bits = total.bits() as i32;
        let shift = (bits - 60).max(0);
        let top = (&total >> shift as usize).to_f64().unwrap();
        (top.ln() + shift as f64 * std::f64::consts::LN_2) / steps as f64
    }

    #[test]
    fn example_routes() {
        let r = paper_example(64).unwrap();
        assert_abs_diff_eq!(r.route_a, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.route_a_blocks[0], 0.0, epsilon = 1e-12);
        assert!(r.gap_b <= 0.05);
        assert!(r.gap_c <= 1e-9);
        assert!(r.grid_decomposition_valid);
        assert_eq!(r.refinement.len(), 4);

        let grid = grid_discretize(&example_maps().correspondence(), 64).unwrap();
        let counted = path_count_rate(&grid.relation, 400);
        assert!((counted - r.route_b).abs() < 0.02, "{counted} vs {}", r.route_b);
    }
}
