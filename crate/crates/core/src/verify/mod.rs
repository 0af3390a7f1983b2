//! Seeded batteries checking the pressure identities and variational
//! principles on random instances.
//!
//! Every battery is deterministic in its seed. A battery is a list of checks,
//! each with the worst gap seen over its cases and the tolerance it was held to.

pub mod gen;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval::{paper_example, ExampleReport};
use crate::kernel::{
    invariant_polytope_extremes, is_invariant, kernel_entropy, pair_from_kernel,
    stationarity_residual, stationary_measures, witness_kernel, InvarianceMode, Partition,
};
use crate::relation::{
    decomposition_pressure, decomposition_validate, inverse_correspondence,
    path_pressure_sequence, relabel, spectral_pressure, FiniteCorrespondence, Potential,
};
use crate::variational::{
    abstract_kernel_entropy, abstract_measure_pressure, directional_derivative,
    gibbs_equilibrium, measure_pressure, Side, SolverConfig,
};

pub const DEFAULT_SEED: u64 = 20_240_901;
/// Half-width of the band around `log 2` for the grid estimate at `N = 1024`.
pub const EXAMPLE_BAND: f64 = 0.05;
pub const EXAMPLE_RESOLUTION: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Largest gap over the cases; for yes/no checks, the failure count.
    pub worst: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One row of the `h` against `𝔥` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub n_states: usize,
    pub n_edges: usize,
    pub kernel_entropy: f64,
    pub abstract_entropy: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Vec<EvidenceRow>>,
}

impl Battery {
    fn new(name: &str, checks: Vec<Tally>) -> Self {
        Battery {
            name: name.into(),
            checks: checks.into_iter().map(Tally::finish).collect(),
            example: None,
            evidence: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Running worst case of one check.
struct Tally {
    name: String,
    tolerance: f64,
    boolean: bool,
    cases: usize,
    failures: usize,
    worst: f64,
    note: Option<String>,
}

impl Tally {
    fn gap(name: &str, tolerance: f64) -> Self {
        Tally {
            name: name.into(),
            tolerance,
            boolean: false,
            cases: 0,
            failures: 0,
            worst: 0.0,
            note: None,
        }
    }

    fn flag(name: &str) -> Self {
        Tally {
            boolean: true,
            ..Tally::gap(name, 0.0)
        }
    }

    fn record(&mut self, gap: f64) {
        self.cases += 1;
        if !(gap <= self.tolerance) {
            self.failures += 1;
        }
        if gap.is_nan() || gap > self.worst {
            self.worst = gap;
        }
    }

    fn ok(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
        }
    }

    /// Records a case whose computation itself failed.
    fn error(&mut self, e: impl std::fmt::Display) {
        self.cases += 1;
        self.failures += 1;
        if self.note.is_none() {
            self.note = Some(format!("case {}: {e}", self.cases));
        }
    }

    fn record_result(&mut self, gap: Result<f64>) {
        match gap {
            Ok(g) => self.record(g),
            Err(e) => self.error(e),
        }
    }

    fn finish(self) -> Check {
        let worst = if self.boolean { self.failures as f64 } else { self.worst };
        Check {
            name: self.name,
            passed: self.failures == 0 && self.cases > 0,
            cases: self.cases,
            failures: self.failures,
            worst,
            tolerance: self.tolerance,
            note: self.note,
        }
    }
}

fn pressure(t: &FiniteCorrespondence, phi: &Potential) -> Result<f64> {
    Ok(spectral_pressure(t, phi)?.pressure)
}

/// The three routes to the pressure of the worked interval example.
pub fn example(resolution: usize) -> Battery {
    let mut a = Tally::gap("route (a) equals log 2", 1e-12);
    let mut b = Tally::gap("route (b) lies in the band around log 2", EXAMPLE_BAND);
    let mut c = Tally::gap("route (c) matches route (b)", 1e-9);
    let mut d = Tally::flag("grid cells over [0,1/2) and [1/2,1] decompose the grid relation");
    let report = match paper_example(resolution) {
        Ok(r) => {
            a.record((r.route_a - std::f64::consts::LN_2).abs());
            b.record(r.gap_b);
            c.record(r.gap_c);
            d.ok(r.grid_decomposition_valid);
            Some(r)
        }
        Err(e) => {
            for t in [&mut a, &mut b, &mut c, &mut d] {
                t.error(&e);
            }
            None
        }
    };
    let mut battery = Battery::new("example", vec![a, b, c, d]);
    battery.example = report;
    battery
}

/// Path-sum oracle against the spectral value, and the basic properties of
/// pressure, on random (mostly reducible) relations.
pub fn basic_properties(seed: u64, count: usize, n_max: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let mut oracle = Tally::gap("|a_1000 - P| on random relations", 5e-3);
    let mut mono = Tally::gap("monotonicity", 1e-9);
    let mut shift = Tally::gap("P(phi + c) = P(phi) + c", 1e-9);
    let mut convex = Tally::gap("convexity on t in {0, 0.1, ..., 1}", 1e-9);
    let mut cob = Tally::gap("coboundary invariance", 1e-9);
    let mut rev = Tally::gap("P(T, phi) = P(T^-1, phi o gamma_2) when T is onto", 1e-12);
    for _ in 0..count {
        let t = gen::relation(&mut rng, n_max);
        let phi = gen::potential(&mut rng, &t, 1.0);
        let Ok(p) = pressure(&t, &phi) else {
            oracle.error("spectral pressure failed");
            continue;
        };
        oracle.record_result(
            path_pressure_sequence(&t, &phi, 1000).map(|a| (a[a.len() - 1] - p).abs()),
        );

        let bump: Vec<f64> = (0..t.n_edges()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let above = Potential::from_values(
            &t,
            phi.values().iter().zip(&bump).map(|(v, b)| v + b).collect(),
        )
        .expect("same edges");
        mono.record_result(pressure(&t, &above).map(|q| (p - q).max(0.0)));

        for _ in 0..20 {
            let c = rng.gen_range(-5.0..5.0);
            shift.record_result(pressure(&t, &phi.shifted(c)).map(|q| (q - p - c).abs()));
        }

        let psi = gen::potential(&mut rng, &t, 1.0);
        match pressure(&t, &psi) {
            Ok(q) => {
                for k in 0..=10 {
                    let s = k as f64 / 10.0;
                    let mixed = phi.scaled(s).add_scaled(&psi, 1.0 - s);
                    convex.record_result(
                        pressure(&t, &mixed).map(|m| (m - s * p - (1.0 - s) * q).max(0.0)),
                    );
                }
            }
            Err(e) => convex.error(e),
        }

        let g = gen::state_function(&mut rng, t.n_states(), 2.0);
        cob.record_result(pressure(&t, &phi.plus_coboundary(&t, &g)).map(|q| (q - p).abs()));

        if t.is_surjective() {
            rev.record_result(inverse_correspondence(&t).and_then(|inv| {
                Ok((pressure(&inv, &phi.reversed(&t, &inv))? - p).abs())
            }));
        }
    }
    Battery::new("basic-properties", vec![oracle, mono, shift, convex, cob, rev])
}

/// LP and subset characterizations of invariance, with kernel witnesses.
pub fn characterization(seed: u64, count: usize, n_max: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let mut agree = Tally::flag("LP and subset modes agree");
    let mut witness = Tally::gap("witness kernel fixes mu", 1e-10);
    let mut positives = 0;
    for k in 0..count {
        let t = gen::relation(&mut rng, n_max);
        let mu = match k % 4 {
            0 | 1 => match gen::invariant_measure(&mut rng, &t) {
                Ok(mu) => mu,
                Err(e) => {
                    agree.error(e);
                    continue;
                }
            },
            2 => gen::state_measure(&mut rng, t.n_states(), false),
            _ => gen::state_measure(&mut rng, t.n_states(), true),
        };
        let report = match is_invariant(&mu, &t, InvarianceMode::Both) {
            Ok(r) => r,
            Err(e) => {
                agree.error(e);
                continue;
            }
        };
        agree.ok(report.modes_agree == Some(true));
        if report.invariant {
            positives += 1;
            match report.witness {
                Some(nu) => witness.record_result(
                    witness_kernel(&t, &nu).and_then(|q| stationarity_residual(&mu, &q)),
                ),
                None => witness.error("no witness for an invariant measure"),
            }
        }
    }
    agree.note = Some(format!("{positives} invariant of {count}"));
    Battery::new("characterization-equivalence", vec![agree, witness])
}

/// Type I principle: the Gibbs pair attains pressure, `P_μ ≤ P`, and on
/// relations built from maps and inverse maps the best extreme point attains
/// pressure.
pub fn type_one(seed: u64, gibbs: usize, bounded: usize, extremes: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let mut attain = Tally::gap("Gibbs pair attains pressure", 1e-9);
    let mut bound = Tally::gap("P_mu <= P at random invariant mu", 1e-8);
    let mut best = Tally::gap("max over extreme points of P_mu equals P", 1e-6);
    for _ in 0..gibbs {
        let n = rng.gen_range(2..=8);
        let t = gen::primitive(&mut rng, n, 0.3);
        let phi = gen::potential(&mut rng, &t, 1.0);
        attain.record_result(
            gibbs_equilibrium(&t, &phi).map(|e| (e.pressure - e.entropy - e.integral).abs()),
        );
    }
    for _ in 0..bounded {
        let n = rng.gen_range(2..=7);
        let t = gen::primitive(&mut rng, n, 0.3);
        let phi = gen::potential(&mut rng, &t, 1.0);
        let Ok(p) = pressure(&t, &phi) else {
            bound.error("spectral pressure failed");
            continue;
        };
        for _ in 0..5 {
            bound.record_result(
                gen::invariant_measure(&mut rng, &t)
                    .and_then(|mu| measure_pressure(&t, &phi, &mu))
                    .map(|m| (m.value - p).max(0.0)),
            );
        }
    }
    for _ in 0..extremes {
        let (t, _) = gen::map_class_relation(&mut rng, crate::kernel::MAX_EXTREME_EDGES);
        let phi = gen::potential(&mut rng, &t, 1.0);
        best.record_result((|| {
            let p = pressure(&t, &phi)?;
            let mut top = f64::NEG_INFINITY;
            for mu in invariant_polytope_extremes(&t)? {
                top = top.max(measure_pressure(&t, &phi, &mu)?.value);
            }
            Ok((top - p).abs())
        })());
    }
    Battery::new("type-one", vec![attain, bound, best])
}

/// Type II principle at the Gibbs pair, `𝔥 ≥ h`, and `−∞` off stationarity.
pub fn type_two(seed: u64, count: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let config = SolverConfig::default();
    let mut attain = Tally::gap("abstract entropy + integral at the Gibbs pair equals P", 1e-4);
    let mut above = Tally::gap("abstract entropy >= kernel entropy", 1e-4);
    let mut off = Tally::flag("non-stationary pair measures give minus infinity");
    for _ in 0..count {
        let n = rng.gen_range(2..=6);
        let t = gen::primitive(&mut rng, n, 0.3);
        let phi = gen::potential(&mut rng, &t, 1.0);
        match gibbs_equilibrium(&t, &phi) {
            Ok(e) => match abstract_kernel_entropy(&t, &e.pair_measure, &config) {
                Ok(a) => {
                    attain.record((a.value + e.integral - e.pressure).abs());
                    above.record((e.entropy - a.value).max(0.0));
                }
                Err(err) => {
                    attain.error(&err);
                    above.error(err);
                }
            },
            Err(err) => attain.error(err),
        }
        let q = gen::kernel(&mut rng, &t);
        above.record_result((|| {
            let mu = stationary_measures(&q)?.remove(0);
            let nu = pair_from_kernel(&mu, &q)?;
            let a = abstract_kernel_entropy(&t, &nu, &config)?;
            Ok((q.entropy_rate(&mu) - a.value).max(0.0))
        })());
        let nu = gen::pair_measure(&mut rng, &t);
        match abstract_kernel_entropy(&t, &nu, &config) {
            Ok(a) => off.ok(nu.marginal_gap(&t) > 1e-9 && a.is_minus_infinity()),
            Err(e) => off.error(e),
        }
    }
    Battery::new("type-two", vec![attain, above, off])
}

/// `h` against `𝔥` on random stationary chains. Recorded as evidence only.
pub fn entropy_evidence(seed: u64, count: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let config = SolverConfig::default();
    let mut tally = Tally::gap("abstract entropy equals kernel entropy on primitive chains", 1e-3);
    let mut rows = Vec::new();
    for _ in 0..count {
        let n = rng.gen_range(2..=7);
        let t = gen::primitive(&mut rng, n, 0.35);
        let q = gen::kernel(&mut rng, &t);
        let row = (|| -> Result<EvidenceRow> {
            let mu = stationary_measures(&q)?.remove(0);
            let nu = pair_from_kernel(&mu, &q)?;
            let a = abstract_kernel_entropy(&t, &nu, &config)?.value;
            let h = q.entropy_rate(&mu);
            Ok(EvidenceRow {
                n_states: n,
                n_edges: t.n_edges(),
                kernel_entropy: h,
                abstract_entropy: a,
                gap: a - h,
            })
        })();
        match row {
            Ok(r) => {
                tally.record(r.gap.abs());
                rows.push(r);
            }
            Err(e) => tally.error(e),
        }
    }
    tally.note = Some("empirical; no equality is asserted beyond these instances".into());
    let mut battery = Battery::new("entropy-evidence", vec![tally]);
    battery.evidence = Some(rows);
    battery
}

/// Tangent derivatives against extrapolated difference quotients, and the
/// two-self-loop fixture where pressure has a corner.
pub fn derivatives(seed: u64, count: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let mut fd = Tally::gap("tangent derivative matches finite differences", 1e-4);
    for _ in 0..count {
        let n = rng.gen_range(2..=8);
        let t = gen::primitive(&mut rng, n, 0.3);
        let phi = gen::potential(&mut rng, &t, 1.0);
        let psi = gen::potential(&mut rng, &t, 1.0);
        fd.record_result(directional_derivative(&t, &phi, &psi, Side::Both).map(|d| {
            let plus = (d.fd_plus.unwrap_or(f64::NAN) - d.plus.unwrap_or(f64::NAN)).abs();
            let minus = (d.fd_minus.unwrap_or(f64::NAN) - d.minus.unwrap_or(f64::NAN)).abs();
            plus.max(minus)
        }));
    }
    let mut corner = Tally::gap("two self-loops: d+ = 1 and d- = 0", 1e-6);
    corner.record_result((|| {
        let t = FiniteCorrespondence::new(2, &[(0, 0), (1, 1)])?;
        let psi = Potential::from_triples(&t, &[(0, 0, 1.0)])?;
        let d = directional_derivative(&t, &Potential::zero(&t), &psi, Side::Both)?;
        let plus = d.plus.unwrap_or(f64::NAN);
        let minus = d.minus.unwrap_or(f64::NAN);
        Ok((plus - 1.0).abs().max(minus.abs()))
    })());
    Battery::new("derivatives", vec![fd, corner])
}

/// Pressure of block-structured relations against the largest block pressure.
pub fn decomposition(seed: u64, count: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let mut valid = Tally::flag("generated blocks pass the decomposition conditions");
    let mut formula = Tally::gap("P equals the largest block pressure", 1e-9);
    for _ in 0..count {
        let (t, blocks) = gen::block_relation(&mut rng, 4);
        let phi = gen::potential(&mut rng, &t, 1.0);
        valid.ok(decomposition_validate(&t, &blocks).passed);
        formula.record_result((|| {
            let p = pressure(&t, &phi)?;
            let (best, _) = decomposition_pressure(&t, &phi, &blocks)?;
            Ok((p - best).abs())
        })());
    }
    Battery::new("decomposition", vec![valid, formula])
}

/// Invariance of `P`, `h`, `P_μ` and `𝔓_μ` under relabeling states.
pub fn conjugacy(seed: u64, count: usize, n_max: usize) -> Battery {
    let mut rng = gen::rng(seed);
    let config = SolverConfig::default();
    let mut p = Tally::gap("pressure", 1e-8);
    let mut h = Tally::gap("kernel entropy", 1e-8);
    let mut pm = Tally::gap("measure pressure", 1e-8);
    let mut ap = Tally::gap("abstract measure pressure", 1e-8);
    for _ in 0..count {
        let n = rng.gen_range(2..=n_max);
        let t = gen::primitive(&mut rng, n, 0.3);
        let phi = gen::potential(&mut rng, &t, 1.0);
        let theta = gen::permutation(&mut rng, n);
        let q = gen::kernel(&mut rng, &t);
        let Ok((s, psi)) = relabel(&t, &phi, &theta) else {
            p.error("relabel failed");
            continue;
        };
        p.record_result((|| Ok((pressure(&t, &phi)? - pressure(&s, &psi)?).abs()))());
        let mu = match stationary_measures(&q) {
            Ok(mut m) => m.remove(0),
            Err(e) => {
                h.error(e);
                continue;
            }
        };
        let mu_s = gen::relabel_measure(&mu, &theta);
        let q_s = match gen::relabel_kernel(&q, &s, &theta) {
            Ok(q_s) => q_s,
            Err(e) => {
                h.error(e);
                continue;
            }
        };
        let discrete = Partition::discrete(n);
        h.record_result((|| {
            let a = kernel_entropy(&mu, &q, 4, &discrete)?.limit;
            let b = kernel_entropy(&mu_s, &q_s, 4, &discrete)?.limit;
            Ok((a - b).abs())
        })());
        pm.record_result((|| {
            let a = measure_pressure(&t, &phi, &mu)?.value;
            let b = measure_pressure(&s, &psi, &mu_s)?.value;
            Ok((a - b).abs())
        })());
        ap.record_result((|| {
            let a = abstract_measure_pressure(&t, &phi, &mu, &config)?.value;
            let b = abstract_measure_pressure(&s, &psi, &mu_s, &config)?.value;
            Ok((a - b).abs())
        })());
    }
    Battery::new("conjugacy", vec![p, h, pm, ap])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Every battery at full size, plus the entropy evidence table.
    All,
    /// Every battery at reduced size.
    Fast,
    Example,
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "fast" => Ok(Suite::Fast),
            "example" => Ok(Suite::Example),
            other => Err(crate::Error::InvalidInput(format!("unknown suite {other:?}"))),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Battery> {
    let mut out = vec![example(EXAMPLE_RESOLUTION)];
    match suite {
        Suite::Example => {}
        Suite::Fast => {
            out.push(basic_properties(seed, 25, 12));
            out.push(characterization(seed, 50, 10));
            out.push(type_one(seed, 25, 5, 5));
            out.push(type_two(seed, 12));
            out.push(derivatives(seed, 25));
            out.push(decomposition(seed, 15));
            out.push(conjugacy(seed, 20, 6));
        }
        Suite::All => {
            out.push(basic_properties(seed, 100, 12));
            out.push(characterization(seed, 200, 10));
            out.push(type_one(seed, 100, 20, 20));
            out.push(type_two(seed, 50));
            out.push(derivatives(seed, 100));
            out.push(decomposition(seed, 50));
            out.push(conjugacy(seed, 100, 6));
            out.push(entropy_evidence(seed, 30));
        }
    }
    out
}
