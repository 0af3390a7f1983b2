use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernel::stationary_measures;
use crate::relation::{spectral_pressure, FiniteCorrespondence, Potential};

const LOG_GOLDEN: f64 = 0.481_211_825_059_603_4;

fn full2() -> FiniteCorrespondence {
    FiniteCorrespondence::new(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
}

fn golden() -> FiniteCorrespondence {
    FiniteCorrespondence::new(2, &[(0, 0), (0, 1), (1, 0)]).unwrap()
}

fn two_loops() -> FiniteCorrespondence {
    FiniteCorrespondence::new(2, &[(0, 0), (1, 1)]).unwrap()
}

fn parry_mu() -> StateMeasure {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    StateMeasure::new(vec![g * g / (1.0 + g * g), 1.0 / (1.0 + g * g)]).unwrap()
}

/// Random relation on `n` states whose graph is strongly connected and aperiodic.
fn random_primitive(rng: &mut ChaCha8Rng, n: usize) -> (FiniteCorrespondence, Potential) {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    edges.push((0, 0));
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(0.3) && !edges.contains(&(i, j)) {
                edges.push((i, j));
            }
        }
    }
    let t = FiniteCorrespondence::new(n, &edges).unwrap();
    let phi = random_potential(rng, &t);
    (t, phi)
}

fn random_potential(rng: &mut ChaCha8Rng, t: &FiniteCorrespondence) -> Potential {
    Potential::from_values(t, (0..t.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn gibbs_full_shift_and_golden() {
    let e = gibbs_equilibrium(&full2(), &Potential::zero(&full2())).unwrap();
    assert_abs_diff_eq!(e.pressure, 2f64.ln(), epsilon = 1e-12);
    for &p in e.kernel.probs() {
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(e.measure.get(0), 0.5, epsilon = 1e-12);

    let t = golden();
    let e = gibbs_equilibrium(&t, &Potential::zero(&t)).unwrap();
    assert_abs_diff_eq!(e.entropy, LOG_GOLDEN, epsilon = 1e-12);
    assert_abs_diff_eq!(e.integral, 0.0, epsilon = 1e-15);
    assert!(e.measure.l1_distance(&parry_mu()) < 1e-12);
}

#[test]
fn gibbs_self_loop_and_ties() {
    let t = FiniteCorrespondence::new(1, &[(0, 0)]).unwrap();
    let e = gibbs_equilibrium(&t, &Potential::constant(&t, 0.7)).unwrap();
    assert_abs_diff_eq!(e.pressure, 0.7, epsilon = 1e-14);
    assert_abs_diff_eq!(e.entropy, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(e.integral, 0.7, epsilon = 1e-14);

    let t = two_loops();
    assert_eq!(
        gibbs_equilibrium(&t, &Potential::zero(&t)).unwrap_err(),
        Error::NonUniqueDominantClass(vec![0, 1])
    );
}

#[test]
fn gibbs_attains_pressure_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.gen_range(2..8);
        let (t, phi) = random_primitive(&mut rng, n);
        let e = gibbs_equilibrium(&t, &phi).unwrap();
        assert!(stationarity_residual(&e.measure, &e.kernel).unwrap() < 1e-10);
        assert_abs_diff_eq!(e.entropy + e.integral, e.pressure, epsilon = 1e-9);
        for (id, &(i, _)) in t.edges().iter().enumerate() {
            assert_abs_diff_eq!(
                e.pair_measure.get(id),
                e.measure.get(i) * e.kernel.probs()[id],
                epsilon = 1e-12
            );
        }
    }
}

#[test]
fn measure_pressure_examples() {
    let t = full2();
    let r = measure_pressure(&t, &Potential::zero(&t), &StateMeasure::uniform(2)).unwrap();
    assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-10);
    for &w in r.pair.weights() {
        assert_abs_diff_eq!(w, 0.25, epsilon = 1e-10);
    }

    let t = FiniteCorrespondence::new(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
    let phi = Potential::from_triples(&t, &[(0, 0, 0.4), (0, 1, 1.0), (1, 0, -1.0), (1, 1, 0.2)])
        .unwrap();
    let r = measure_pressure(&t, &phi, &StateMeasure::dirac(2, 1)).unwrap();
    assert_abs_diff_eq!(r.value, 0.2, epsilon = 1e-12);
    assert_abs_diff_eq!(r.pair.get(3), 1.0, epsilon = 1e-12);

    let t = golden();
    let r = measure_pressure(&t, &Potential::zero(&t), &parry_mu()).unwrap();
    assert_abs_diff_eq!(r.value, LOG_GOLDEN, epsilon = 1e-10);

    let t = FiniteCorrespondence::new(2, &[(0, 1), (1, 1)]).unwrap();
    assert_eq!(
        measure_pressure(&t, &Potential::zero(&t), &StateMeasure::dirac(2, 0)).unwrap_err(),
        Error::NotInvariant
    );
}

/// Brute-force maximization over the one-parameter family of pair measures
/// with marginals `(p, 1 − p)` on the full 2-shift: `ν = [[p − s, s], [s, 1 − p − s]]`.
#[test]
fn measure_pressure_matches_one_dimensional_search() {
    let t = full2();
    let phi = Potential::from_triples(&t, &[(0, 0, 0.3), (0, 1, -0.2), (1, 0, 0.5), (1, 1, 0.1)])
        .unwrap();
    let p = 0.35;
    let mu = StateMeasure::new(vec![p, 1.0 - p]).unwrap();
    let objective = |s: f64| {
        let nu = [p - s, s, s, 1.0 - p - s];
        let marg = [p, p, 1.0 - p, 1.0 - p];
        (0..4)
            .filter(|&k| nu[k] > 0.0)
            .map(|k| nu[k] * (phi.get(k) - (nu[k] / marg[k]).ln()))
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0, p);
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if objective(a) < objective(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let r = measure_pressure(&t, &phi, &mu).unwrap();
    assert_abs_diff_eq!(r.value, objective(0.5 * (lo + hi)), epsilon = 1e-10);
    assert_abs_diff_eq!(r.pair.get(1), 0.5 * (lo + hi), epsilon = 1e-6);
}

#[test]
fn measure_pressure_on_a_thin_face() {
    // μ uniform on a 3-cycle with a chord: the chord can carry no mass
    let t = FiniteCorrespondence::new(3, &[(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
    let phi = Potential::from_triples(&t, &[(0, 1, 0.1), (1, 2, 0.2), (2, 0, 0.3), (0, 2, 5.0)])
        .unwrap();
    let r = measure_pressure(&t, &phi, &StateMeasure::uniform(3)).unwrap();
    assert_abs_diff_eq!(r.pair.get(t.edge_id(0, 2).unwrap()), 0.0);
    assert_abs_diff_eq!(r.value, 0.2, epsilon = 1e-12);
}

#[test]
fn variational_inequality_for_random_invariant_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..15 {
        let n = rng.gen_range(2..6);
        let (t, phi) = random_primitive(&mut rng, n);
        let p = spectral_pressure(&t, &phi).unwrap().pressure;
        // stationary law of a random kernel supported by T
        let probs: Vec<f64> = (0..t.n_edges()).map(|_| rng.gen_range(0.05..1.0)).collect();
        let q = TransitionKernel::from_unnormalized_rows(&t, probs).unwrap();
        let mu = stationary_measures(&q).unwrap().remove(0);
        let r = measure_pressure(&t, &phi, &mu).unwrap();
        assert!(r.value <= p + 1e-8);
        // the chain's own value is feasible, so the maximum dominates it
        let own = q.entropy_rate(&mu) + pair_from_kernel(&mu, &q).unwrap().integrate(phi.values());
        assert!(r.value >= own - 1e-9);
    }
}

#[test]
fn abstract_entropy_examples() {
    let cfg = SolverConfig::default();
    let t = full2();
    let nu = PairMeasure::new(&t, vec![0.25; 4]).unwrap();
    let r = abstract_kernel_entropy(&t, &nu, &cfg).unwrap();
    assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-10);
    assert!(!r.report.boundary_flag);

    let nu = PairMeasure::from_triples(&t, &[(1, 1, 1.0)]).unwrap();
    let r = abstract_kernel_entropy(&t, &nu, &cfg).unwrap();
    assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
    assert!(r.report.boundary_flag);

    let nu = PairMeasure::from_triples(&t, &[(0, 0, 0.5), (0, 1, 0.3), (1, 0, 0.1), (1, 1, 0.1)])
        .unwrap();
    let r = abstract_kernel_entropy(&t, &nu, &cfg).unwrap();
    assert!(r.is_minus_infinity());
    // oracle: f is linear and decreasing along the coboundary ray
    let psi = [1.0, 0.0];
    let f = |s: f64| {
        let phi = Potential::zero(&t).plus_coboundary(&t, &[s * psi[0], s * psi[1]]);
        spectral_pressure(&t, &phi).unwrap().pressure - nu.integrate(phi.values())
    };
    assert_abs_diff_eq!(f(0.0) - f(100.0), 100.0 * 0.2, epsilon = 1e-9);
}

#[test]
fn abstract_entropy_equals_markov_entropy_of_circulations() {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.gen_range(2..7);
        let (t, phi) = random_primitive(&mut rng, n);
        let e = gibbs_equilibrium(&t, &phi).unwrap();
        let nu = &e.pair_measure;
        let r = abstract_kernel_entropy(&t, nu, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, nu.markov_entropy(&t), epsilon = 1e-8);
        assert_abs_diff_eq!(r.value + nu.integrate(phi.values()), e.pressure, epsilon = 1e-8);

        // the returned potential lies in C'_T and realizes the value
        let psi = r.potential.unwrap();
        let neg = Potential::from_values(&t, psi.values().iter().map(|v| -v).collect()).unwrap();
        assert_abs_diff_eq!(spectral_pressure(&t, &neg).unwrap().pressure, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(nu.integrate(psi.values()), r.value, epsilon = 1e-8);
        // coboundaries do not move the objective at the optimum
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shifted = psi.plus_coboundary(&t, &theta);
        assert_abs_diff_eq!(nu.integrate(shifted.values()), r.value, epsilon = 1e-8);

        let normalized = SolverConfig {
            normalize: true,
            ..SolverConfig::default()
        };
        let again = abstract_kernel_entropy(&t, nu, &normalized).unwrap();
        assert_abs_diff_eq!(again.value, r.value, epsilon = 1e-9);
    }
}

#[test]
fn abstract_entropy_splits_over_classes() {
    let cfg = SolverConfig::default();
    let t = FiniteCorrespondence::new(
        4,
        &[(0, 0), (0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (3, 3)],
    )
    .unwrap();
    // a mixture of a circulation on {0, 1} and one on {2, 3}
    let nu = PairMeasure::from_triples(
        &t,
        &[(0, 0, 0.2), (0, 1, 0.1), (1, 0, 0.1), (2, 3, 0.2), (3, 2, 0.2), (3, 3, 0.2)],
    )
    .unwrap();
    let r = abstract_kernel_entropy(&t, &nu, &cfg).unwrap();
    assert_abs_diff_eq!(r.value, nu.markov_entropy(&t), epsilon = 1e-9);
    assert!(r.report.boundary_flag);

    // mass on the bridge (1, 2) lies on no cycle
    let nu = PairMeasure::from_triples(&t, &[(0, 0, 0.5), (1, 2, 0.2), (3, 3, 0.3)]).unwrap();
    assert!(abstract_kernel_entropy(&t, &nu, &cfg).unwrap().is_minus_infinity());
}

#[test]
fn abstract_entropy_fixed_step_rule() {
    let cfg = SolverConfig {
        step_rule: StepRule::Fixed,
        ..SolverConfig::default()
    };
    let t = golden();
    let e = gibbs_equilibrium(&t, &Potential::zero(&t)).unwrap();
    let r = abstract_kernel_entropy(&t, &e.pair_measure, &cfg).unwrap();
    assert_abs_diff_eq!(r.value, LOG_GOLDEN, epsilon = 1e-8);
}

#[test]
fn abstract_pressure_examples() {
    let cfg = SolverConfig::default();
    let t = full2();
    let r = abstract_measure_pressure(&t, &Potential::zero(&t), &StateMeasure::uniform(2), &cfg)
        .unwrap();
    assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-8);

    let r = abstract_measure_pressure(&t, &Potential::zero(&t), &StateMeasure::dirac(2, 0), &cfg)
        .unwrap();
    assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-10);

    let t = golden();
    let r = abstract_measure_pressure(&t, &Potential::zero(&t), &parry_mu(), &cfg).unwrap();
    assert_abs_diff_eq!(r.value, LOG_GOLDEN, epsilon = 1e-8);
}

#[test]
fn abstract_pressure_dominates_measure_pressure() {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let n = rng.gen_range(2..5);
        let (t, phi) = random_primitive(&mut rng, n);
        let probs: Vec<f64> = (0..t.n_edges()).map(|_| rng.gen_range(0.05..1.0)).collect();
        let q = TransitionKernel::from_unnormalized_rows(&t, probs).unwrap();
        let mu = stationary_measures(&q).unwrap().remove(0);
        let pm = measure_pressure(&t, &phi, &mu).unwrap().value;
        let ap = abstract_measure_pressure(&t, &phi, &mu, &cfg).unwrap().value;
        let p = spectral_pressure(&t, &phi).unwrap().pressure;
        assert!(ap >= pm - 1e-8, "{ap} < {pm}");
        assert!(ap <= p + 1e-8);
    }
}

#[test]
fn tangents() {
    let t = two_loops();
    let ts = tangent_functionals(&t, &Potential::zero(&t)).unwrap();
    assert!(!ts.is_unique);
    assert_eq!(ts.extreme_tangents.len(), 2);
    assert_eq!(ts.extreme_tangents[0].weights(), &[1.0, 0.0]);
    assert_eq!(ts.extreme_tangents[1].weights(), &[0.0, 1.0]);

    let t = golden();
    let ts = tangent_functionals(&t, &Potential::zero(&t)).unwrap();
    assert!(ts.is_unique);
    let e = gibbs_equilibrium(&t, &Potential::zero(&t)).unwrap();
    assert!(ts.extreme_tangents[0].l1_distance(&e.pair_measure) < 1e-12);

    let ts = tangent_functionals(&full2(), &Potential::zero(&full2())).unwrap();
    for &w in ts.extreme_tangents[0].weights() {
        assert_abs_diff_eq!(w, 0.25, epsilon = 1e-12);
    }
}

#[test]
fn tangent_inequality_on_random_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..10 {
        let n = rng.gen_range(2..6);
        let (t, phi) = random_primitive(&mut rng, n);
        let p = spectral_pressure(&t, &phi).unwrap().pressure;
        let ts = tangent_functionals(&t, &phi).unwrap();
        for _ in 0..50 {
            let psi = random_potential(&mut rng, &t);
            let q = spectral_pressure(&t, &phi.add_scaled(&psi, 1.0)).unwrap().pressure;
            for nu in &ts.extreme_tangents {
                assert!(q - p >= nu.integrate(psi.values()) - 1e-8);
            }
        }
    }
}

#[test]
fn derivative_examples() {
    let t = two_loops();
    let psi = Potential::from_triples(&t, &[(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
    let d = directional_derivative(&t, &Potential::zero(&t), &psi, Side::Both).unwrap();
    assert_abs_diff_eq!(d.plus.unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.minus.unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.fd_plus.unwrap(), 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(d.fd_minus.unwrap(), 0.0, epsilon = 1e-6);
    assert!(d.consistent);
    assert_eq!(d.gateaux, Some(false));

    let t = golden();
    let psi = Potential::from_triples(&t, &[(0, 0, 0.3), (0, 1, -1.0), (1, 0, 2.0)]).unwrap();
    let d = directional_derivative(&t, &Potential::zero(&t), &psi, Side::Both).unwrap();
    let e = gibbs_equilibrium(&t, &Potential::zero(&t)).unwrap();
    assert_abs_diff_eq!(d.plus.unwrap(), e.pair_measure.integrate(psi.values()), epsilon = 1e-12);
    assert_eq!(d.gateaux, Some(true));
    assert!(d.consistent);

    let c = Potential::constant(&t, 0.8);
    let d = directional_derivative(&t, &psi, &c, Side::Plus).unwrap();
    assert_abs_diff_eq!(d.plus.unwrap(), 0.8, epsilon = 1e-12);
    assert_eq!(d.minus, None);
}

#[test]
fn equilibrium_checks() {
    let cfg = SolverConfig::default();
    let t = golden();
    let phi = Potential::zero(&t);
    let e = gibbs_equilibrium(&t, &phi).unwrap();
    let v = equilibrium_check(&t, &phi, &e.kernel, &e.measure, EquilibriumKind::One, &cfg).unwrap();
    assert!(v.is_equilibrium && v.gap.abs() <= 1e-9);

    let q = TransitionKernel::uniform(&t);
    let mu = stationary_measures(&q).unwrap().remove(0);
    let v = equilibrium_check(&t, &phi, &q, &mu, EquilibriumKind::One, &cfg).unwrap();
    assert!(!v.is_equilibrium && v.gap > 1e-3);
    let v2 = equilibrium_check(&t, &phi, &q, &mu, EquilibriumKind::Two, &cfg).unwrap();
    assert!(!v2.is_equilibrium);
    assert!(v2.entropy >= v.entropy - 1e-8);

    assert!(matches!(
        equilibrium_check(&t, &phi, &q, &StateMeasure::dirac(2, 1), EquilibriumKind::One, &cfg),
        Err(Error::NotStationary(_))
    ));

    // tangents of the tied two-loop relation are kind-two equilibria
    let t = two_loops();
    let phi = Potential::zero(&t);
    let ts = tangent_functionals(&t, &phi).unwrap();
    for nu in &ts.extreme_tangents {
        let (q, mu) = kernel_of_pair(&t, nu).unwrap();
        let v = equilibrium_check(&t, &phi, &q, &mu, EquilibriumKind::Two, &cfg).unwrap();
        assert!(v.is_equilibrium);
        assert!(tangent_hull_distance(nu, &ts) < 1e-12);
    }
    let mid = PairMeasure::new(&t, vec![0.5, 0.5]).unwrap();
    assert!(tangent_hull_distance(&mid, &ts) < 1e-12);
}
