//! Dense two-phase simplex with Bland's rule, and vertex enumeration by
//! exploring the graph of feasible bases.
//!
//! Everything is generic over [`Field`] so the same code runs in `f64`
//! (with an absolute tolerance) and in exact `BigRational` arithmetic.
//! Problems are given in standard equality form `A x = b, x >= 0`.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};

/// Scalar type usable by the simplex.
pub trait Field: Num + Signed + Clone + PartialOrd + Debug {
    /// Values with absolute value at or below this are treated as zero.
    fn tolerance() -> Self;

    /// Coarser tolerance used for phase-one infeasibility and vertex dedup.
    fn coarse_tolerance() -> Self;

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }
}

impl Field for f64 {
    fn tolerance() -> Self {
        1e-11
    }

    fn coarse_tolerance() -> Self {
        1e-9
    }
}

impl Field for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn coarse_tolerance() -> Self {
        BigRational::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<F> {
    Optimal { x: Vec<F>, value: F },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
struct Tableau<F> {
    /// `m` rows of `ncols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<F>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<F: Field> Tableau<F> {
    fn rhs(&self, r: usize) -> &F {
        &self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let factor = row[c].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(pivot_row.iter()) {
                *v = v.clone() - factor.clone() * pv.clone();
            }
            // keep the pivot column exactly clean in floating point
            row[c] = F::zero();
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[F]) -> Vec<F> {
        let mut d: Vec<F> = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj = dj.clone() - cb.clone() * self.rows[r][j].clone();
            }
        }
        d
    }

    /// Leaving row for entering column `c`, ties broken by smallest basic index.
    fn ratio_test(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, F)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][c];
            if !a.is_positive_tol() {
                continue;
            }
            let ratio = self.rhs(r).clone() / a.clone();
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let diff = ratio.clone() - bratio.clone();
                    if diff.is_negative_tol()
                        || (diff.is_negligible() && self.basis[r] < self.basis[br])
                    {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    /// Runs Bland's rule on the columns in `allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[F], allowed: usize) -> bool {
        loop {
            let d = self.reduced_costs(cost);
            let entering = (0..allowed).find(|&j| d[j].is_negative_tol());
            let Some(c) = entering else {
                return true;
            };
            match self.ratio_test(c) {
                Some(r) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn solution(&self) -> Vec<F> {
        let mut x = vec![F::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.ncols {
                x[b] = self.rhs(r).clone();
            }
        }
        x
    }
}

/// Phase one: returns a tableau over the original columns with a feasible
/// basis and redundant rows removed, or `None` if infeasible.
fn phase_one<F: Field>(a: &[Vec<F>], b: &[F]) -> Option<Tableau<F>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    for (r, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n, "constraint rows must have equal length");
        let flip = b[r].is_negative();
        let mut t = Vec::with_capacity(total + 1);
        for v in row {
            t.push(if flip { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            t.push(if k == r { F::one() } else { F::zero() });
        }
        t.push(if flip { -b[r].clone() } else { b[r].clone() });
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..total).collect(),
        ncols: total,
    };
    let mut cost = vec![F::zero(); total];
    for c in cost.iter_mut().skip(n) {
        *c = F::one();
    }
    tab.optimize(&cost, total);
    let infeas: F = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bi)| bi >= n)
        .fold(F::zero(), |acc, (r, _)| acc + tab.rhs(r).clone());
    if infeas > F::coarse_tolerance() {
        return None;
    }
    // Drive artificial variables out of the basis; drop redundant rows.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| !tab.rows[r][j].is_negligible()) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }
    // Strip artificial columns.
    for row in tab.rows.iter_mut() {
        let rhs = row[total].clone();
        row.truncate(n);
        row.push(rhs);
    }
    tab.ncols = n;
    Some(tab)
}

/// Minimizes `c . x` subject to `A x = b`, `x >= 0`.
pub fn minimize<F: Field>(c: &[F], a: &[Vec<F>], b: &[F]) -> LpOutcome<F> {
    let Some(mut tab) = phase_one(a, b) else {
        return LpOutcome::Infeasible;
    };
    let n = tab.ncols;
    if !tab.optimize(c, n) {
        return LpOutcome::Unbounded;
    }
    let x = tab.solution();
    let value = x
        .iter()
        .zip(c)
        .fold(F::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    LpOutcome::Optimal { x, value }
}

/// Any basic feasible solution of `A x = b, x >= 0`.
pub fn feasible_point<F: Field>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    phase_one(a, b).map(|t| t.solution())
}

/// Enumerates every vertex of the polytope `{x >= 0 : A x = b}` by a
/// breadth-first search over feasible bases connected by simplex pivots.
///
/// `max_bases` bounds the number of visited bases; `None` is returned if the
/// bound is hit. Vertices are deduplicated (exactly for rationals, within the
/// field tolerance for floats) and returned in discovery order.
pub fn enumerate_vertices<F: Field>(
    a: &[Vec<F>],
    b: &[F],
    max_bases: usize,
) -> Option<Vec<Vec<F>>> {
    let Some(start) = phase_one(a, b) else {
        return Some(Vec::new());
    };
    let n = start.ncols;
    let mut seen: HashSet<BTreeSet<usize>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.basis.iter().copied().collect());
    queue.push_back(start);
    let mut vertices: Vec<Vec<F>> = Vec::new();

    while let Some(tab) = queue.pop_front() {
        let x = tab.solution();
        if !vertices.iter().any(|v| same_point(v, &x)) {
            vertices.push(x);
        }
        let basic: HashSet<usize> = tab.basis.iter().copied().collect();
        for c in (0..n).filter(|c| !basic.contains(c)) {
            let rows = leaving_candidates(&tab, c);
            for r in rows {
                let mut key: BTreeSet<usize> = tab.basis.iter().copied().collect();
                key.remove(&tab.basis[r]);
                key.insert(c);
                if seen.contains(&key) {
                    continue;
                }
                if seen.len() >= max_bases {
                    return None;
                }
                seen.insert(key);
                let mut next = tab.clone();
                next.pivot(r, c);
                queue.push_back(next);
            }
        }
    }
    Some(vertices)
}

/// All rows attaining the minimum ratio for entering column `c`.
fn leaving_candidates<F: Field>(tab: &Tableau<F>, c: usize) -> Vec<usize> {
    let mut best: Option<F> = None;
    let mut rows = Vec::new();
    for r in 0..tab.rows.len() {
        let a = &tab.rows[r][c];
        if !a.is_positive_tol() {
            continue;
        }
        let ratio = tab.rhs(r).clone() / a.clone();
        match &best {
            None => {
                best = Some(ratio);
                rows = vec![r];
            }
            Some(bv) => {
                let diff = ratio.clone() - bv.clone();
                if diff.is_negative_tol() {
                    best = Some(ratio);
                    rows = vec![r];
                } else if diff.is_negligible() {
                    rows.push(r);
                }
            }
        }
    }
    rows
}

fn same_point<F: Field>(u: &[F], v: &[F]) -> bool {
    u.iter()
        .zip(v)
        .all(|(a, b)| (a.clone() - b.clone()).abs() <= F::coarse_tolerance())
}
