//! Acceptance criteria. Prints one line per criterion and exits non-zero if
//! any fails.

use std::time::{Duration, Instant};

use corrpress::interval::{example_maps, grid_discretize};
use corrpress::verify::{self, Battery, DEFAULT_SEED, EXAMPLE_BAND, EXAMPLE_RESOLUTION};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// `(1/n) log #{paths with n transitions}`, counted exactly.
fn counted_rate(t: &corrpress::FiniteCorrespondence, steps: usize) -> f64 {
    let mut counts = vec![BigUint::one(); t.n_states()];
    for _ in 0..steps {
        let mut next = vec![BigUint::zero(); t.n_states()];
        for &(i, j) in t.edges() {
            next[j] += &counts[i];
        }
        counts = next;
    }
    let total: BigUint = counts.iter().sum();
    let shift = total.bits().saturating_sub(60);
    let top = (&total >> shift).to_f64().unwrap();
    (top.ln() + shift as f64 * std::f64::consts::LN_2) / steps as f64
}

struct Outcome {
    passed: bool,
    summary: String,
}

fn summarize(batteries: &[Battery], elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for b in batteries {
        for c in &b.checks {
            passed &= c.passed;
            parts.push(format!(
                "{}: worst {:.3e} / tol {:.0e} over {}{}{}",
                c.name,
                c.worst,
                c.tolerance,
                c.cases,
                if c.passed { "" } else { " FAILED" },
                c.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            ));
        }
    }
    if let Some(limit) = limit {
        let ok = elapsed <= limit;
        passed &= ok;
        parts.push(format!(
            "runtime {:.2}s / limit {}s{}",
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if ok { "" } else { " FAILED" }
        ));
    }
    Outcome {
        passed,
        summary: parts.join("; "),
    }
}

fn timed(f: impl FnOnce() -> Vec<Battery>) -> (Vec<Battery>, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() {
    let seed = DEFAULT_SEED;
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let (b, dt) = timed(|| vec![verify::example(EXAMPLE_RESOLUTION)]);
    let mut outcome = summarize(&b, dt, Some(Duration::from_secs(30)));
    // independent check of route (b) by counting paths on the same grid
    let grid = grid_discretize(&example_maps().correspondence(), EXAMPLE_RESOLUTION).unwrap();
    let counted = counted_rate(&grid.relation, 4000);
    let route_b = b[0].example.as_ref().map_or(f64::NAN, |r| r.route_b);
    let counted_ok = (counted - route_b).abs() <= 5e-3
        && (counted - std::f64::consts::LN_2).abs() <= EXAMPLE_BAND;
    outcome.passed &= counted_ok;
    outcome.summary.push_str(&format!(
        "; path count rate at 4000 steps {counted:.6} vs route (b) {route_b:.12}{}",
        if counted_ok { "" } else { " FAILED" }
    ));
    results.push(("1 example reproduction", outcome));

    let (b, dt) = timed(|| vec![verify::basic_properties(seed, 100, 12)]);
    results.push(("2 pressure oracle equivalence", summarize(&b, dt, Some(Duration::from_secs(60)))));

    let (b, dt) = timed(|| vec![verify::characterization(seed, 200, 10)]);
    results.push(("3 characterization equivalence", summarize(&b, dt, None)));

    let (b, dt) = timed(|| vec![verify::type_one(seed, 100, 20, 20)]);
    results.push(("4 type I principle", summarize(&b, dt, None)));

    let (b, dt) = timed(|| vec![verify::type_two(seed, 50)]);
    results.push(("5 type II principle", summarize(&b, dt, None)));

    let (b, dt) = timed(|| vec![verify::derivatives(seed, 100)]);
    results.push(("6 derivatives and tangents", summarize(&b, dt, None)));

    let (b, dt) = timed(|| vec![verify::decomposition(seed, 50)]);
    results.push(("7 decomposition formula", summarize(&b, dt, None)));

    let (b, dt) = timed(|| vec![verify::conjugacy(seed, 100, 6)]);
    results.push(("8 conjugacy invariance", summarize(&b, dt, None)));

    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
