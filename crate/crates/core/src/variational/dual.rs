//! The abstract entropy `𝔥(ν) = inf_φ {P(T, φ) − ⟨ν, φ⟩}` as a convex
//! program over edge potentials.

use serde::{Deserialize, Serialize};

use super::{class_gibbs, SolverConfig, SolverReport, StepRule};
use crate::error::{Error, Result};
use crate::kernel::PairMeasure;
use crate::relation::spectral::{components_of, is_cyclic, spectral_pressure};
use crate::relation::{FiniteCorrespondence, Potential};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Round-off allowance in the sufficient-decrease test.
const EVAL_NOISE: f64 = 2e-13;
/// Edges outside the support of `ν` get potentials this far below the rest.
const OFF_SUPPORT_GAP: f64 = 60.0;

/// Result of [`abstract_kernel_entropy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractEntropy {
    /// `f64::NEG_INFINITY` when the objective is unbounded below.
    pub value: f64,
    /// Near-optimal `ψ` with `P(T, −ψ) = 0` and `⟨ν, ψ⟩ ≈ value`.
    pub potential: Option<Potential>,
    pub report: SolverReport,
}

impl AbstractEntropy {
    pub fn is_minus_infinity(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// One cyclic class of the support graph of `ν`, in local indices.
struct Class {
    states: Vec<usize>,
    edges: Vec<(usize, usize)>,
    edge_ids: Vec<usize>,
    nu: Vec<f64>,
    weight: f64,
}

struct Descent {
    value: f64,
    /// `φ` on the class edges, shifted so the class pressure is 0.
    phi: Vec<f64>,
    iterations: usize,
    residual: f64,
    diverged: bool,
}

/// Minimizes `f(φ) = P(T, φ) − ⟨ν, φ⟩` by gradient descent from `φ = 0`.
///
/// The gradient is `gibbs(φ) − ν`. Edges outside the support of `ν` only
/// lower `f` as their potential decreases, so the search runs on the support,
/// where `f` splits exactly into `Σ_k w_k f_k` over its cyclic classes. Mass
/// on a support edge joining two classes lies on no cycle, and `f` is then
/// unbounded along that edge.
pub fn abstract_kernel_entropy(
    t: &FiniteCorrespondence,
    nu: &PairMeasure,
    config: &SolverConfig,
) -> Result<AbstractEntropy> {
    config.check()?;
    if nu.weights().len() != t.n_edges() {
        return Err(Error::ShapeMismatch {
            expected: t.n_edges(),
            found: nu.weights().len(),
        });
    }
    let n = t.n_states();
    let support: Vec<usize> = (0..t.n_edges()).filter(|&id| nu.get(id) > 0.0).collect();
    let boundary_flag = support.len() < t.n_edges();
    let support_edges: Vec<(usize, usize)> = support.iter().map(|&id| t.edges()[id]).collect();

    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Class> = Vec::new();
    for comp in components_of(n, &support_edges) {
        if !is_cyclic(&comp, &support_edges) {
            continue;
        }
        for &s in &comp {
            class_of[s] = classes.len();
        }
        classes.push(Class {
            states: comp,
            edges: Vec::new(),
            edge_ids: Vec::new(),
            nu: Vec::new(),
            weight: 0.0,
        });
    }
    let mut crossing = 0.0;
    for &id in &support {
        let (i, j) = t.edges()[id];
        let c = class_of[i];
        if c != usize::MAX && c == class_of[j] {
            let class = &mut classes[c];
            let li = class.states.binary_search(&i).expect("member");
            let lj = class.states.binary_search(&j).expect("member");
            class.edges.push((li, lj));
            class.edge_ids.push(id);
            class.nu.push(nu.get(id));
            class.weight += nu.get(id);
        } else {
            crossing += nu.get(id);
        }
    }

    if crossing > 0.0 {
        return Ok(minus_infinity(0, crossing, boundary_flag));
    }

    let mut value = 0.0;
    let mut iterations = 0;
    let mut residual: f64 = 0.0;
    let mut phi_full = vec![f64::NAN; t.n_edges()];
    for class in &mut classes {
        for w in &mut class.nu {
            *w /= class.weight;
        }
        let d = descend(class, config)?;
        iterations += d.iterations;
        if d.diverged {
            return Ok(minus_infinity(iterations, d.residual, boundary_flag));
        }
        residual = residual.max(d.residual);
        value += class.weight * d.value;
        for (&id, &p) in class.edge_ids.iter().zip(&d.phi) {
            phi_full[id] = p;
        }
    }
    if residual > config.tolerance {
        return Err(Error::ConvergenceFailure(iterations));
    }

    let spread: f64 = phi_full.iter().filter(|p| p.is_finite()).map(|p| p.abs()).fold(0.0, f64::max);
    let low = -(OFF_SUPPORT_GAP + n as f64 * spread);
    for p in &mut phi_full {
        if !p.is_finite() {
            *p = low;
        }
    }
    let phi = Potential::from_values(t, phi_full)?;
    let p = spectral_pressure(t, &phi)?.pressure;
    let psi = Potential::from_values(t, phi.values().iter().map(|v| p - v).collect())?;
    Ok(AbstractEntropy {
        value,
        potential: Some(psi),
        report: SolverReport {
            value,
            iterations,
            residual,
            converged: true,
            boundary_flag,
            tangent_count: None,
        },
    })
}

fn minus_infinity(iterations: usize, residual: f64, boundary_flag: bool) -> AbstractEntropy {
    AbstractEntropy {
        value: f64::NEG_INFINITY,
        potential: None,
        report: SolverReport {
            value: f64::NEG_INFINITY,
            iterations,
            residual,
            converged: true,
            boundary_flag,
            tangent_count: None,
        },
    }
}

/// Gradient descent on one class.
///
/// `φ` is carried as `a + Bᵀu`, where `(Bᵀu)(i,j) = u_i − u_j`. Coboundaries
/// leave the pressure unchanged, so `f = [P(a) − ⟨ν, a⟩] − d·u` with
/// `d = π₁ν − π₂ν`, and the gradient splits into a cycle part acting on `a` and
/// the coboundary part `−Bᵀu*` with `L u* = d`, which acts on `u` alone.
fn descend(class: &Class, config: &SolverConfig) -> Result<Descent> {
    let k = class.states.len();
    let m = class.edges.len();
    let all: Vec<usize> = (0..k).collect();
    let nu = &class.nu;

    let mut d = vec![0.0; k];
    for (&(i, j), &w) in class.edges.iter().zip(nu) {
        d[i] += w;
        d[j] -= w;
    }
    let u_star = laplacian_solve(k, &class.edges, &d);
    let cob: Vec<f64> = class.edges.iter().map(|&(i, j)| u_star[i] - u_star[j]).collect();
    let cob_sq: f64 = cob.iter().map(|c| c * c).sum();
    let nu_cycle: Vec<f64> = nu.iter().zip(&cob).map(|(w, c)| w - c).collect();

    let eval = |a: &[f64], warm: Option<(&[f64], &[f64])>| -> Result<Eval> {
        let (pair, gibbs) = class_gibbs(k, &class.edges, a, &all, warm)?;
        let f = pair.log_rho - dot(nu, a);
        if !f.is_finite() || gibbs.iter().any(|g| !g.is_finite()) {
            return Err(Error::ConvergenceFailure(pair.iterations));
        }
        let grad: Vec<f64> = gibbs.iter().zip(&nu_cycle).map(|(g, w)| g - w).collect();
        Ok(Eval {
            log_rho: pair.log_rho,
            f,
            grad,
            right: pair.right,
            left: pair.left,
        })
    };

    let mut a = vec![0.0; m];
    // u = u_mult · u*, and u_shift = −d·u
    let mut u_mult = 0.0;
    let mut u_shift = 0.0;
    let mut s_u = 1.0;
    let mut cur = eval(&a, None)?;
    let mut step = 1.0;
    let mut iterations = 0;
    let residual_of = |e: &Eval| (norm_sq(&e.grad) + cob_sq).sqrt();
    // an unbalanced ν makes f linear and unbounded along u; a stays frozen
    let balanced = cob_sq.sqrt() <= config.tolerance;

    loop {
        let residual = residual_of(&cur);
        let total = cur.f + u_shift;
        if total < config.divergence_floor {
            return Ok(Descent {
                value: f64::NEG_INFINITY,
                phi: Vec::new(),
                iterations,
                residual,
                diverged: true,
            });
        }
        if balanced && norm_sq(&cur.grad).sqrt() <= config.tolerance {
            break;
        }
        if iterations >= config.max_iterations {
            return Err(Error::ConvergenceFailure(iterations));
        }
        iterations += 1;

        let g_sq = norm_sq(&cur.grad);
        if balanced && g_sq > 0.0 {
            let next = match config.step_rule {
                StepRule::Fixed => {
                    let trial: Vec<f64> = a.iter().zip(&cur.grad).map(|(x, g)| x - g).collect();
                    let e = eval(&trial, Some((&cur.right, &cur.left)))?;
                    Some((trial, e, 1.0))
                }
                StepRule::Backtracking => {
                    let mut s = step;
                    let mut found = None;
                    for _ in 0..MAX_HALVINGS {
                        let trial: Vec<f64> = a.iter().zip(&cur.grad).map(|(x, g)| x - s * g).collect();
                        if let Ok(e) = eval(&trial, Some((&cur.right, &cur.left))) {
                            let allowance = EVAL_NOISE * (1.0 + cur.f.abs());
                            if e.f <= cur.f - ARMIJO * s * g_sq + allowance {
                                found = Some((trial, e, s));
                                break;
                            }
                        }
                        s *= 0.5;
                    }
                    found
                }
            };
            let Some((trial, e, s)) = next else {
                return Err(Error::ConvergenceFailure(iterations));
            };
            // Barzilai-Borwein length for the next trial step
            let da: Vec<f64> = trial.iter().zip(&a).map(|(x, y)| x - y).collect();
            let dg: Vec<f64> = e.grad.iter().zip(&cur.grad).map(|(x, y)| x - y).collect();
            let curv = dot(&da, &dg);
            step = if curv > 0.0 { norm_sq(&da) / curv } else { 2.0 * s };
            step = step.clamp(1e-12, 1e12);
            a = trial;
            cur = e;
        }
        if !balanced {
            u_mult += s_u;
            u_shift -= s_u * cob_sq;
            if config.step_rule == StepRule::Backtracking {
                s_u *= 2.0;
            }
        }
        if config.normalize {
            // P(a + c) − ⟨ν, a + c⟩ = P(a) − ⟨ν, a⟩ because ν has mass one
            let c = cur.log_rho;
            for x in &mut a {
                *x -= c;
            }
            cur.f = cur.log_rho - c - dot(nu, &a);
            cur.log_rho = 0.0;
        }
    }

    let u: Vec<f64> = u_star.iter().map(|x| x * u_mult).collect();
    let phi: Vec<f64> = class
        .edges
        .iter()
        .zip(&a)
        .map(|(&(i, j), x)| x - cur.log_rho + u[i] - u[j])
        .collect();
    Ok(Descent {
        value: cur.f + u_shift,
        residual: residual_of(&cur),
        phi,
        iterations,
        diverged: false,
    })
}

struct Eval {
    log_rho: f64,
    f: f64,
    grad: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

/// Conjugate gradients for `B Bᵀ u = d` on a connected graph, where
/// `(Bν)_i = Σ_out ν − Σ_in ν`.
pub(crate) fn laplacian_solve(k: usize, edges: &[(usize, usize)], d: &[f64]) -> Vec<f64> {
    let apply = |x: &[f64]| {
        let mut y = vec![0.0; k];
        for &(i, j) in edges {
            let v = x[i] - x[j];
            y[i] += v;
            y[j] -= v;
        }
        y
    };
    // the kernel is the constants; drop their round-off share of d
    let mean = d.iter().sum::<f64>() / k as f64;
    let mut x = vec![0.0; k];
    let mut r: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let mut p = r.clone();
    let mut rr = norm_sq(&r);
    let target = (1e-30 * rr).max(1e-34);
    for _ in 0..4 * k + 10 {
        if rr <= target {
            break;
        }
        let lp = apply(&p);
        let denom = dot(&p, &lp);
        if denom <= 0.0 {
            break;
        }
        let alpha = rr / denom;
        for i in 0..k {
            x[i] += alpha * p[i];
            r[i] -= alpha * lp[i];
        }
        let rr_new = norm_sq(&r);
        let beta = rr_new / rr;
        for i in 0..k {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}
