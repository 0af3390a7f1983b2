//! Variational principles for pressure: the Gibbs chain attaining the kernel
//! entropy supremum, measure pressure `P_μ`, the abstract entropy `𝔥` and
//! abstract pressure `𝔓_μ`, tangent functionals, one-sided derivatives and
//! equilibrium-state tests.

mod dual;
mod transport;

pub use dual::{abstract_kernel_entropy, AbstractEntropy};
pub use transport::{abstract_measure_pressure, measure_pressure, AbstractPressure, MeasurePressure};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    pair_from_kernel, stationarity_residual, PairMeasure, StateMeasure, TransitionKernel,
    STATIONARY_TOLERANCE,
};
use crate::lp::{self, LpOutcome};
use crate::relation::spectral::{perron_on, PerronPair};
use crate::relation::{spectral_pressure, FiniteCorrespondence, Potential};

/// Largest gap accepted by [`equilibrium_check`].
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;
/// `|d⁺ − d⁻|` at or below this counts as Gateaux differentiable.
pub const GATEAUX_TOLERANCE: f64 = 1e-8;
/// Required agreement between tangent and finite-difference derivatives.
pub const DERIVATIVE_AGREEMENT: f64 = 1e-4;
const FD_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    Backtracking,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub step_rule: StepRule,
    pub divergence_floor: f64,
    /// Shift each iterate so that its pressure is zero.
    pub normalize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 10_000,
            tolerance: 1e-8,
            step_rule: StepRule::Backtracking,
            divergence_floor: -50.0,
            normalize: false,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !self.divergence_floor.is_finite() {
            return Err(Error::InvalidInput("divergence_floor must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub boundary_flag: bool,
    pub tangent_count: Option<usize>,
}

/// An invariant pair `(Q, μ)` with its pressure split `entropy + integral`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    pub kernel: TransitionKernel,
    pub measure: StateMeasure,
    pub pair_measure: PairMeasure,
    pub pressure: f64,
    pub entropy: f64,
    pub integral: f64,
}

/// Perron data of one irreducible class and its Gibbs pair measure
/// `ν(i,j) = l_i e^{w(i,j)} r_j / ρ` on the class edges (zero elsewhere).
pub(crate) fn class_gibbs(
    n: usize,
    edges: &[(usize, usize)],
    log_w: &[f64],
    class: &[usize],
    warm: Option<(&[f64], &[f64])>,
) -> Result<(PerronPair, Vec<f64>)> {
    let pair = perron_on(n, edges, log_w, class, warm)?;
    let nu = edges
        .iter()
        .zip(log_w)
        .map(|(&(i, j), &w)| pair.left[i] * (w - pair.log_rho).exp() * pair.right[j])
        .collect();
    Ok((pair, nu))
}

/// The Gibbs chain of the dominant class: `Q(i,j) = M_ij r_j / (ρ r_i)` and
/// `μ ∝ l ⊙ r`. Other states carry no mass and Dirac rows.
pub fn gibbs_equilibrium(t: &FiniteCorrespondence, phi: &Potential) -> Result<EquilibriumPair> {
    let sp = spectral_pressure(t, phi)?;
    if !sp.is_unique() {
        return Err(Error::NonUniqueDominantClass(sp.dominant_classes));
    }
    let class = &sp.components[sp.dominant_classes[0]];
    let pair = perron_on(t.n_states(), t.edges(), phi.values(), class, None)?;
    let mut probs = vec![0.0; t.n_edges()];
    for (id, &(i, j)) in t.edges().iter().enumerate() {
        if pair.right[i] > 0.0 && pair.right[j] > 0.0 {
            probs[id] = (phi.get(id) - pair.log_rho).exp() * pair.right[j] / pair.right[i];
        }
    }
    let kernel = TransitionKernel::from_unnormalized_rows(t, probs)?;
    let measure = StateMeasure::normalized(
        pair.left.iter().zip(&pair.right).map(|(l, r)| l * r).collect(),
    )?;
    let pair_measure = pair_from_kernel(&measure, &kernel)?;
    let entropy = kernel.entropy_rate(&measure);
    let integral = pair_measure.integrate(phi.values());
    Ok(EquilibriumPair {
        kernel,
        measure,
        pair_measure,
        pressure: sp.pressure,
        entropy,
        integral,
    })
}

/// Extreme tangent functionals at `φ`: one Gibbs pair measure per dominant class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSet {
    pub extreme_tangents: Vec<PairMeasure>,
    pub is_unique: bool,
}

pub fn tangent_functionals(t: &FiniteCorrespondence, phi: &Potential) -> Result<TangentSet> {
    let sp = spectral_pressure(t, phi)?;
    let extreme_tangents = sp
        .dominant_classes
        .iter()
        .map(|&c| {
            let (_, nu) = class_gibbs(t.n_states(), t.edges(), phi.values(), &sp.components[c], None)?;
            PairMeasure::normalized(t, nu)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentSet {
        is_unique: extreme_tangents.len() == 1,
        extreme_tangents,
    })
}

/// Smallest `‖ν − τ‖₁` over `τ` in the convex hull of the tangents.
pub fn tangent_hull_distance(nu: &PairMeasure, tangents: &TangentSet) -> f64 {
    let k = tangents.extreme_tangents.len();
    let m = nu.weights().len();
    // variables: λ (k), then p, q (m each) with ν − Σ λ τ = p − q
    let cols = k + 2 * m;
    let mut a = vec![vec![0.0; cols]; m + 1];
    for e in 0..m {
        for (c, tau) in tangents.extreme_tangents.iter().enumerate() {
            a[e][c] = tau.get(e);
        }
        a[e][k + e] = 1.0;
        a[e][k + m + e] = -1.0;
    }
    for c in 0..k {
        a[m][c] = 1.0;
    }
    let mut b = nu.weights().to_vec();
    b.push(1.0);
    let mut cost = vec![0.0; cols];
    for c in k..cols {
        cost[c] = 1.0;
    }
    match lp::minimize(&cost, &a, &b) {
        LpOutcome::Optimal { value, .. } => value.max(0.0),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    Both,
}

/// One-sided derivatives of `t ↦ P(T, φ + tψ)` at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    /// `d⁺ = max ⟨ν, ψ⟩` over the tangents.
    pub plus: Option<f64>,
    /// `d⁻ = min ⟨ν, ψ⟩` over the tangents.
    pub minus: Option<f64>,
    pub fd_plus: Option<f64>,
    pub fd_minus: Option<f64>,
    /// Both computations agree within [`DERIVATIVE_AGREEMENT`].
    pub consistent: bool,
    /// Set for [`Side::Both`]: `|d⁺ − d⁻| ≤` [`GATEAUX_TOLERANCE`].
    pub gateaux: Option<bool>,
    pub tangent_count: usize,
}

pub fn directional_derivative(
    t: &FiniteCorrespondence,
    phi: &Potential,
    psi: &Potential,
    side: Side,
) -> Result<Derivative> {
    psi.check(t)?;
    let tangents = tangent_functionals(t, phi)?;
    let pairings: Vec<f64> = tangents
        .extreme_tangents
        .iter()
        .map(|nu| nu.integrate(psi.values()))
        .collect();
    let d_plus = pairings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d_minus = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    let base = spectral_pressure(t, phi)?.pressure;

    let want_plus = side != Side::Minus;
    let want_minus = side != Side::Plus;
    let fd_plus = if want_plus { Some(richardson(t, phi, psi, base, 1.0)?) } else { None };
    let fd_minus = if want_minus { Some(richardson(t, phi, psi, base, -1.0)?) } else { None };
    let consistent = fd_plus.is_none_or(|fd| (fd - d_plus).abs() <= DERIVATIVE_AGREEMENT)
        && fd_minus.is_none_or(|fd| (fd - d_minus).abs() <= DERIVATIVE_AGREEMENT);
    Ok(Derivative {
        plus: want_plus.then_some(d_plus),
        minus: want_minus.then_some(d_minus),
        fd_plus,
        fd_minus,
        consistent,
        gateaux: (side == Side::Both).then(|| (d_plus - d_minus).abs() <= GATEAUX_TOLERANCE),
        tangent_count: tangents.extreme_tangents.len(),
    })
}

/// One-sided difference quotients at `FD_STEPS`, extrapolated twice.
/// `sign = −1` gives the left derivative.
fn richardson(
    t: &FiniteCorrespondence,
    phi: &Potential,
    psi: &Potential,
    base: f64,
    sign: f64,
) -> Result<f64> {
    let mut q = [0.0; 3];
    for (k, &h) in FD_STEPS.iter().enumerate() {
        let p = spectral_pressure(t, &phi.add_scaled(psi, sign * h))?.pressure;
        q[k] = sign * (p - base) / h;
    }
    let r1 = (10.0 * q[1] - q[0]) / 9.0;
    let r2 = (10.0 * q[2] - q[1]) / 9.0;
    Ok((100.0 * r2 - r1) / 99.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    /// Measured with the kernel entropy `h_μ(Q)`.
    One,
    /// Measured with the abstract entropy `𝔥_μ(Q)`.
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumVerdict {
    pub is_equilibrium: bool,
    /// `P(T, φ) − [entropy + integral]`; `+∞` when the entropy is `−∞`.
    pub gap: f64,
    pub pressure: f64,
    pub entropy: f64,
    pub integral: f64,
}

pub fn equilibrium_check(
    t: &FiniteCorrespondence,
    phi: &Potential,
    q: &TransitionKernel,
    mu: &StateMeasure,
    kind: EquilibriumKind,
    config: &SolverConfig,
) -> Result<EquilibriumVerdict> {
    if q.correspondence() != t {
        return Err(Error::InvalidInput("kernel is supported by a different correspondence".into()));
    }
    let pressure = spectral_pressure(t, phi)?.pressure;
    let nu = pair_from_kernel(mu, q)?;
    let integral = nu.integrate(phi.values());
    let entropy = match kind {
        EquilibriumKind::One => {
            let residual = stationarity_residual(mu, q)?;
            if residual > STATIONARY_TOLERANCE {
                return Err(Error::NotStationary(residual));
            }
            q.entropy_rate(mu)
        }
        EquilibriumKind::Two => abstract_kernel_entropy(t, &nu, config)?.value,
    };
    let gap = pressure - (entropy + integral);
    Ok(EquilibriumVerdict {
        is_equilibrium: gap <= EQUILIBRIUM_TOLERANCE,
        gap,
        pressure,
        entropy,
        integral,
    })
}

/// Kernel and state measure of a pair measure: `μ = π₁ν` and rows of `ν`
/// normalized where `μ > 0`.
pub fn kernel_of_pair(t: &FiniteCorrespondence, nu: &PairMeasure) -> Result<(TransitionKernel, StateMeasure)> {
    let q = crate::kernel::witness_kernel(t, nu)?;
    let mu = StateMeasure::normalized(nu.first_marginal(t))?;
    Ok((q, mu))
}

#[cfg(test)]
mod tests;
