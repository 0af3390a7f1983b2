// 12-digit report values, compared as printed
#![allow(clippy::approx_constant)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const LN2: f64 = std::f64::consts::LN_2;

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = Command::new(env!("CARGO_BIN_EXE_corrpress"))
        .args(args)
        .output()
        .expect("binary runs");
    let code = out.status.code().expect("exit code");
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v, out)
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn golden(dir: &TempDir) -> PathBuf {
    write(dir, "golden.json", &json!({"n_states": 2, "edges": [[0, 0], [0, 1], [1, 0]]}))
}

#[test]
fn full_shift_pressure() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", &json!({"n_states": 2, "edges": [[0, 0], [0, 1], [1, 0], [1, 1]]}));
    let (code, v, _) = run(&["pressure", "--input", s(&t)]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["command"], "pressure");
    assert_eq!(f(&v["results"]["spectral"]["pressure"]), 0.693147180560);
    assert_eq!(v["inputs"]["input"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn golden_mean_paths_and_gap() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let (code, v, _) = run(&["pressure", "--input", s(&t), "--method", "both", "--n", "1000"]);
    assert_eq!(code, 0);
    let a = f(&v["results"]["paths"]["a_n"]);
    assert!((a - 0.481212).abs() <= 5e-3);
    assert!(f(&v["results"]["gap"]) <= 5e-3);
}

#[test]
fn malformed_relation_exits_2() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", &json!({"n_states": 2, "edges": [[0, 1], [0, 1], [1, 0]]}));
    let (code, v, _) = run(&["pressure", "--input", s(&t)]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["kind"], "DuplicateEdge");

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{not json").unwrap();
    let (code, v, _) = run(&["pressure", "--input", s(&junk)]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "Parse");
    let (code, _, _) = run(&["pressure", "--input", s(&dir.path().join("missing.json"))]);
    assert_eq!(code, 2);
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let a = run(&["equilibrium", "--input", s(&t)]).2.stdout;
    let b = run(&["equilibrium", "--input", s(&t)]).2.stdout;
    assert_eq!(a, b);
}

#[test]
fn equilibrium_documents_round_trip() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let phi = write(&dir, "phi.json", &json!({"edges": [[0, 0, 0.3], [1, 0, -0.2]]}));
    let (code, v, _) = run(&["equilibrium", "--input", s(&t), "--phi", s(&phi)]);
    assert_eq!(code, 0);
    let r = &v["results"];
    let q = write(&dir, "q.json", &r["kernel"]);
    let mu = write(&dir, "mu.json", &r["measure"]);
    let nu = write(&dir, "nu.json", &r["pair_measure"]);

    let (code, k, _) = run(&["kentropy", "--input", s(&t), "--kernel", s(&q), "--mu", s(&mu)]);
    assert_eq!(code, 0, "{k}");
    assert!((f(&k["results"]["limit"]) - f(&r["entropy"])).abs() < 1e-10);

    for kind in ["one", "two"] {
        let (code, c, _) = run(&[
            "equilibrium", "--input", s(&t), "--phi", s(&phi), "--kernel", s(&q), "--mu", s(&mu),
            "--kind", kind,
        ]);
        assert_eq!(code, 0, "{c}");
        assert_eq!(c["results"]["is_equilibrium"], true);
    }

    let (code, a, _) = run(&["aentropy", "--input", s(&t), "--nu", s(&nu)]);
    assert_eq!(code, 0);
    assert!((f(&a["results"]["value"]) - f(&r["entropy"])).abs() < 1e-6);
    let psi = write(&dir, "psi.json", &a["results"]["potential"]);
    let (code, _, _) = run(&["pressure", "--input", s(&t), "--phi", s(&psi)]);
    assert_eq!(code, 0);

    let (code, m, _) = run(&["mpressure", "--input", s(&t), "--phi", s(&phi), "--mu", s(&mu), "--method", "both"]);
    assert_eq!(code, 0, "{m}");
    let p = f(&r["pressure"]);
    assert!((f(&m["results"]["measure_pressure"]["value"]) - p).abs() < 1e-8);
    assert!(f(&m["results"]["abstract_measure_pressure"]["value"]) >= p - 1e-6);
}

#[test]
fn non_stationary_pair_has_minus_infinite_entropy() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let nu = write(&dir, "nu.json", &json!({"edges": [[0, 0, 0.2], [0, 1, 0.5], [1, 0, 0.3]]}));
    let (code, v, _) = run(&["aentropy", "--input", s(&t), "--nu", s(&nu)]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["value"], "-inf");
}

#[test]
fn invariance_and_extremes() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let half = write(&dir, "half.json", &json!({"weights": [0.5, 0.5]}));
    let (code, v, _) = run(&["invariant", "--input", s(&t), "--mu", s(&half)]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["invariant"], true);
    assert_eq!(v["results"]["modes_agree"], true);
    assert!(f(&v["results"]["stationarity_residual"]) <= 1e-10);

    let skewed = write(&dir, "skewed.json", &json!({"weights": [0.2, 0.8]}));
    let (_, v, _) = run(&["invariant", "--input", s(&t), "--mu", s(&skewed), "--method", "subsets"]);
    assert_eq!(v["results"]["invariant"], false);
    assert_eq!(v["results"]["violating_set"], json!([1]));

    let mix = write(&dir, "mix.json", &json!({"weights": [0.75, 0.25]}));
    let (code, v, _) = run(&["extremes", "--input", s(&t), "--mu", s(&mix)]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["results"]["count"], 2);
    let dec = v["results"]["decomposition"].as_array().unwrap();
    assert_eq!(dec.len(), 2);
    for d in dec {
        assert!((f(&d["weight"]) - 0.5).abs() < 1e-12);
    }

    let (code, v, _) = run(&["extremes", "--input", s(&t), "--mu", s(&skewed)]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "NotInvariant");
}

#[test]
fn corner_derivative() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", &json!({"n_states": 2, "edges": [[0, 0], [1, 1]]}));
    let psi = write(&dir, "psi.json", &json!({"edges": [[0, 0, 1.0]]}));
    let (code, v, _) = run(&["derivative", "--input", s(&t), "--psi", s(&psi)]);
    assert_eq!(code, 0);
    let r = &v["results"];
    assert!((f(&r["plus"]) - 1.0).abs() <= 1e-6);
    assert!(f(&r["minus"]).abs() <= 1e-6);
    assert_eq!(r["gateaux"], false);
    assert_eq!(r["tangent_count"], 2);
}

#[test]
fn relabel_and_decompose() {
    let dir = TempDir::new().unwrap();
    let t = write(
        &dir,
        "t.json",
        &json!({"n_states": 3, "edges": [[0, 0], [0, 1], [1, 2], [2, 1], [2, 2]]}),
    );
    let phi = write(&dir, "phi.json", &json!({"edges": [[0, 0, 0.9], [2, 2, 0.1]]}));
    let (code, v, _) = run(&["relabel", "--input", s(&t), "--phi", s(&phi), "--theta", "2,0,1"]);
    assert_eq!(code, 0);
    let r = &v["results"];
    assert_eq!(r["pressure_before"], r["pressure_after"]);
    let s2 = write(&dir, "s.json", &r["relation"]);
    let psi = write(&dir, "psi.json", &r["potential"]);
    let (_, back, _) = run(&["pressure", "--input", s(&s2), "--phi", s(&psi)]);
    assert_eq!(back["results"]["spectral"]["pressure"], r["pressure_before"]);

    let blocks = write(&dir, "b.json", &json!({"blocks": [[0], [1, 2]]}));
    let (code, v, _) = run(&["decompose", "--input", s(&t), "--phi", s(&phi), "--blocks", s(&blocks)]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["valid"], true);
    assert!(f(&v["results"]["gap"]) <= 1e-9);

    let backwards = write(&dir, "c.json", &json!({"blocks": [[1, 2], [0]]}));
    let (_, v, _) = run(&["decompose", "--input", s(&t), "--blocks", s(&backwards)]);
    assert_eq!(v["results"]["valid"], false);
    assert_eq!(v["results"]["failure"]["condition"], "v");

    let (code, _, _) = run(&["relabel", "--input", s(&t), "--theta", "0,0,1"]);
    assert_eq!(code, 2);
}

#[test]
fn discretize_fixture_and_maps() {
    let (code, v, _) = run(&["discretize", "--grid", "8"]);
    assert_eq!(code, 0);
    assert!((f(&v["results"]["pressure"]) - LN2).abs() < 1e-12);
    assert_eq!(v["inputs"]["input"]["fixture"], "lllz-example");

    let (code, v, _) = run(&["discretize", "--method", "example", "--grid", "64"]);
    assert_eq!(code, 0);
    assert_eq!(f(&v["results"]["route_a"]), 0.693147180560);

    let dir = TempDir::new().unwrap();
    let h2 = write(
        &dir,
        "h2.json",
        &json!({"breakpoints": ["1/2", "3/4", "1"], "pieces": [
            {"slope": "2", "intercept": "-1/2"}, {"slope": "-2", "intercept": "5/2"}]}),
    );
    let (code, v, _) = run(&["discretize", "--input", s(&h2), "--method", "markov", "--partition", "1/2,3/4,1"]);
    assert_eq!(code, 0, "{v}");
    assert!((f(&v["results"]["pressure"]) - LN2).abs() < 1e-12);
    let (code, v, _) = run(&["discretize", "--input", s(&h2), "--method", "markov", "--partition", "1/2,2/3,1"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "NotMarkov");
    // h2 is not defined on all of [0, 1]
    let (code, _, _) = run(&["discretize", "--input", s(&h2), "--grid", "8"]);
    assert_eq!(code, 2);

    let tent = write(
        &dir,
        "tent.json",
        &json!({"branches": [{"breakpoints": ["0", "1/2", "1"], "pieces": [
            {"slope": "2", "intercept": "0"}, {"slope": "-2", "intercept": "2"}]}]}),
    );
    let (code, v, _) = run(&["discretize", "--input", s(&tent), "--grid", "16"]);
    assert_eq!(code, 0);
    assert!((f(&v["results"]["pressure"]) - LN2).abs() < 1e-9);
    let (code, v, _) = run(&["discretize", "--input", s(&tent), "--grid", "12"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "InvalidInput");
}

#[test]
fn verify_example_suite() {
    let (code, v, _) = run(&["verify", "--suite", "example"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["passed"], true);
    let ex = &v["results"]["batteries"][0]["example"];
    assert_eq!(f(&ex["route_a"]), 0.693147180560);
    assert_eq!(ex["refinement"].as_array().unwrap().len(), 8);
}

#[test]
fn output_file_is_never_overwritten() {
    let dir = TempDir::new().unwrap();
    let t = golden(&dir);
    let out = dir.path().join("report.json");
    let (code, _, o) = run(&["pressure", "--input", s(&t), "--output", s(&out)]);
    assert_eq!(code, 0);
    assert!(o.stdout.is_empty());
    let written: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(written["status"], "ok");
    let (code, _, _) = run(&["pressure", "--input", s(&t), "--output", s(&out)]);
    assert_eq!(code, 2);
}
