//! `corrpress`: pressure, invariant measures and variational principles for
//! finite correspondences, from JSON documents.

mod docs;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corrpress::interval::EXAMPLE_FIXTURE;
use corrpress::kernel::{witness_kernel, Partition};
use corrpress::verify::{self, Battery, Suite, DEFAULT_SEED};
use corrpress::{
    Error, FiniteCorrespondence, InvarianceMode, PairMeasure, Potential, SolverConfig,
    StateMeasure, TransitionKernel,
};
use serde_json::{json, Map, Value};

use docs::{InputError, Loaded};
use report::{doc, num, nums, ErrorDoc, RunReport};

#[derive(Parser)]
#[command(name = "corrpress", version, about = "Pressure of finite correspondences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report destination; `-` writes to standard output. Files are never overwritten.
    #[arg(long, global = true, default_value = "-")]
    output: String,
}

#[derive(Subcommand)]
enum Command {
    /// Topological pressure by spectral radius and/or path sums.
    Pressure {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "spectral")]
        method: PressureMethod,
        /// Path length for the path-sum estimate.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "fast")]
        suite: SuiteArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Gibbs equilibrium pair, or an equilibrium test of a given (Q, mu).
    Equilibrium {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, requires = "mu")]
        kernel: Option<PathBuf>,
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "one")]
        kind: KindArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Measure pressure P_mu, and optionally the abstract measure pressure.
    Mpressure {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_enum, default_value = "measure")]
        method: MeasureMethod,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Abstract kernel entropy of a pair measure.
    Aentropy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Decide invariance of a state measure.
    Invariant {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: ModeArg,
    },
    /// Extreme invariant measures, and the decomposition of mu over them.
    Extremes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mu: Option<PathBuf>,
    },
    /// Kernel entropy of a stationary pair (Q, mu).
    Kentropy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
    /// One-sided derivatives of pressure at phi in direction psi.
    Derivative {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        psi: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: SideArg,
    },
    /// Grid or Markov models of interval correspondences.
    Discretize {
        /// Map or branches document, or the built-in fixture name.
        #[arg(long, default_value = EXAMPLE_FIXTURE)]
        input: String,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, value_enum, default_value = "grid")]
        method: DiscretizeMethod,
        /// Comma-separated cell endpoints for `markov`, e.g. `0,1/2,1`.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Transport (T, phi) along a permutation of states.
    Relabel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Comma-separated images of states 0, 1, ...
        #[arg(long)]
        theta: String,
    },
    /// Validate a block decomposition and compute its pressure.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        blocks: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PressureMethod {
    Spectral,
    Paths,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Fast,
    Example,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    One,
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureMethod {
    Measure,
    Abstract,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lp,
    Subsets,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiscretizeMethod {
    Grid,
    Markov,
    Example,
}

enum Failure {
    Input(InputError),
    Core(Error),
    /// A verification suite ran and some check failed.
    Verify(Value),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Input(_) => 2,
            Failure::Core(Error::ConvergenceFailure(_) | Error::ScalingDiverged(_)) => 3,
            Failure::Core(_) => 2,
        }
    }

    fn doc(&self) -> ErrorDoc {
        let (kind, message) = match self {
            Failure::Input(InputError::Invalid { source, .. }) => (variant(source), self.message()),
            Failure::Input(InputError::Io { .. }) => ("Io".to_string(), self.message()),
            Failure::Input(InputError::Parse { .. }) => ("Parse".to_string(), self.message()),
            Failure::Input(InputError::Usage(_)) => ("Usage".to_string(), self.message()),
            Failure::Core(e) => (variant(e), self.message()),
            Failure::Verify(_) => ("VerificationFailed".to_string(), self.message()),
        };
        ErrorDoc { kind, message }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(e) => e.to_string(),
            Failure::Core(e) => e.to_string(),
            Failure::Verify(_) => "at least one check failed".into(),
        }
    }
}

/// Name of the error variant, e.g. `DuplicateEdge`.
fn variant(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Loads input files and records their digests.
#[derive(Default)]
struct Inputs {
    digests: Map<String, Value>,
}

impl Inputs {
    fn load(&mut self, role: &str, path: &Path) -> Result<Loaded, InputError> {
        let f = Loaded::read(path)?;
        self.digests
            .insert(role.into(), json!({"path": f.path, "sha256": f.sha256()}));
        Ok(f)
    }

    fn relation(&mut self, path: &Path) -> Result<FiniteCorrespondence, InputError> {
        let f = self.load("input", path)?;
        let d: docs::RelationDoc = f.parse()?;
        d.build().map_err(|e| f.invalid(e))
    }

    fn potential(
        &mut self,
        role: &str,
        t: &FiniteCorrespondence,
        path: Option<&Path>,
    ) -> Result<Potential, InputError> {
        let Some(path) = path else {
            return Ok(Potential::zero(t));
        };
        let f = self.load(role, path)?;
        let d: docs::PotentialDoc = f.parse()?;
        Potential::from_triples(t, &d.edges).map_err(|e| f.invalid(e))
    }

    fn measure(&mut self, role: &str, t: &FiniteCorrespondence, path: &Path) -> Result<StateMeasure, InputError> {
        let f = self.load(role, path)?;
        docs::measure(f.parse()?, t.n_states()).map_err(|e| f.invalid(e))
    }

    fn kernel(&mut self, t: &FiniteCorrespondence, path: &Path) -> Result<TransitionKernel, InputError> {
        let f = self.load("kernel", path)?;
        docs::kernel(f.parse()?, t).map_err(|e| f.invalid(e))
    }

    fn pair(&mut self, t: &FiniteCorrespondence, path: &Path) -> Result<PairMeasure, InputError> {
        let f = self.load("nu", path)?;
        docs::pair(f.parse()?, t).map_err(|e| f.invalid(e))
    }

    fn config(&mut self, path: Option<&Path>) -> Result<SolverConfig, InputError> {
        let parsed = match path {
            Some(p) => {
                let f = self.load("config", p)?;
                let c: SolverConfig = f.parse()?;
                docs::config(Some(c)).map_err(|e| f.invalid(e))?
            }
            None => SolverConfig::default(),
        };
        Ok(parsed)
    }
}

fn measure_doc(mu: &StateMeasure) -> Value {
    json!({"weights": nums(mu.weights())})
}

fn solver_config_doc(c: &SolverConfig) -> Value {
    json!({
        "max_iterations": c.max_iterations,
        "tolerance": num(c.tolerance),
        "divergence_floor": num(c.divergence_floor),
    })
}

fn battery_doc(b: &Battery) -> Value {
    let checks: Vec<Value> = b
        .checks
        .iter()
        .map(|c| {
            let mut v = json!({
                "name": c.name,
                "passed": c.passed,
                "cases": c.cases,
                "failures": c.failures,
                "worst": num(c.worst),
                "tolerance": num(c.tolerance),
            });
            if let Some(n) = &c.note {
                v["note"] = json!(n);
            }
            v
        })
        .collect();
    let mut v = json!({"name": b.name, "passed": b.passed(), "checks": checks});
    if let Some(r) = &b.example {
        v["example"] = example_doc(r);
    }
    if let Some(rows) = &b.evidence {
        v["evidence"] = Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "n_states": r.n_states,
                        "n_edges": r.n_edges,
                        "kernel_entropy": num(r.kernel_entropy),
                        "abstract_entropy": num(r.abstract_entropy),
                        "gap": num(r.gap),
                    })
                })
                .collect(),
        );
    }
    v
}

fn example_doc(r: &corrpress::ExampleReport) -> Value {
    json!({
        "resolution": r.resolution,
        "route_a": num(r.route_a),
        "route_a_blocks": nums(&r.route_a_blocks),
        "route_b": num(r.route_b),
        "route_c": num(r.route_c),
        "gap_b": num(r.gap_b),
        "gap_c": num(r.gap_c),
        "band": num(verify::EXAMPLE_BAND),
        "grid_decomposition_valid": r.grid_decomposition_valid,
        "refinement": r.refinement.iter().map(|&(n, p)| json!([n, num(p)])).collect::<Vec<_>>(),
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, InputError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| InputError::Usage(format!("{what}: cannot parse {x:?}")))
        })
        .collect()
}

fn run(command: &Command, inputs: &mut Inputs) -> Result<Value, Failure> {
    match command {
        Command::Pressure { input, phi, method, n } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let mut out = json!({"n_states": t.n_states(), "n_edges": t.n_edges()});
            let mut spectral = None;
            if *method != PressureMethod::Paths {
                let sp = corrpress::spectral_pressure(&t, &phi)?;
                out["spectral"] = json!({
                    "pressure": num(sp.pressure),
                    "components": sp.components,
                    "class_pressures": sp.class_pressures.iter().map(|&(c, p)| json!([c, num(p)])).collect::<Vec<_>>(),
                    "dominant_classes": sp.dominant_classes,
                    "unique": sp.is_unique(),
                });
                spectral = Some(sp.pressure);
            }
            if *method != PressureMethod::Spectral {
                let seq = corrpress::path_pressure_sequence(&t, &phi, *n)?;
                let a_n = seq[seq.len() - 1];
                out["paths"] = json!({"n": n, "a_n": num(a_n)});
                if let Some(p) = spectral {
                    out["gap"] = num((a_n - p).abs());
                }
            }
            Ok(out)
        }
        Command::Verify { suite, seed } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Fast => Suite::Fast,
                SuiteArg::Example => Suite::Example,
            };
            let batteries = verify::run_suite(suite, *seed);
            let passed = batteries.iter().all(Battery::passed);
            let out = json!({
                "suite": suite,
                "seed": seed,
                "passed": passed,
                "batteries": batteries.iter().map(battery_doc).collect::<Vec<_>>(),
            });
            if passed {
                Ok(out)
            } else {
                Err(Failure::Verify(out))
            }
        }
        Command::Equilibrium { input, phi, kernel, mu, kind, config } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let config = inputs.config(config.as_deref())?;
            match (kernel, mu) {
                (Some(k), Some(m)) => {
                    let q = inputs.kernel(&t, k)?;
                    let mu = inputs.measure("mu", &t, m)?;
                    let kind = match kind {
                        KindArg::One => corrpress::EquilibriumKind::One,
                        KindArg::Two => corrpress::EquilibriumKind::Two,
                    };
                    let v = corrpress::equilibrium_check(&t, &phi, &q, &mu, kind, &config)?;
                    Ok(json!({
                        "is_equilibrium": v.is_equilibrium,
                        "gap": num(v.gap),
                        "pressure": num(v.pressure),
                        "entropy": num(v.entropy),
                        "integral": num(v.integral),
                    }))
                }
                _ => {
                    let e = corrpress::gibbs_equilibrium(&t, &phi)?;
                    Ok(json!({
                        "pressure": num(e.pressure),
                        "entropy": num(e.entropy),
                        "integral": num(e.integral),
                        "gap": num(e.pressure - e.entropy - e.integral),
                        "measure": measure_doc(&e.measure),
                        "kernel": doc(&docs::KernelDoc::of(&e.kernel)),
                        "pair_measure": doc(&docs::PairDoc::of(&t, &e.pair_measure)),
                    }))
                }
            }
        }
        Command::Mpressure { input, phi, mu, method, config } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let mu = inputs.measure("mu", &t, mu)?;
            let config = inputs.config(config.as_deref())?;
            let mut out = json!({});
            if *method != MeasureMethod::Abstract {
                let m = corrpress::measure_pressure(&t, &phi, &mu)?;
                out["measure_pressure"] = json!({
                    "value": num(m.value),
                    "iterations": m.iterations,
                    "residual": num(m.residual),
                    "pair_measure": doc(&docs::PairDoc::of(&t, &m.pair)),
                });
            }
            if *method != MeasureMethod::Measure {
                let a = corrpress::abstract_measure_pressure(&t, &phi, &mu, &config)?;
                out["abstract_measure_pressure"] = json!({
                    "value": num(a.value),
                    "s": num(a.s),
                    "evaluations": a.evaluations,
                    "pair_measure": doc(&docs::PairDoc::of(&t, &a.pair)),
                    "config": solver_config_doc(&config),
                });
            }
            Ok(out)
        }
        Command::Aentropy { input, nu, config } => {
            let t = inputs.relation(input)?;
            let nu = inputs.pair(&t, nu)?;
            let config = inputs.config(config.as_deref())?;
            let a = corrpress::abstract_kernel_entropy(&t, &nu, &config)?;
            let mut out = json!({
                "value": num(a.value),
                "iterations": a.report.iterations,
                "residual": num(a.report.residual),
                "converged": a.report.converged,
                "boundary_flag": a.report.boundary_flag,
                "tangent_count": a.report.tangent_count,
                "marginal_gap": num(nu.marginal_gap(&t)),
                "config": solver_config_doc(&config),
            });
            if let Some(p) = &a.potential {
                out["potential"] = doc(&docs::PotentialDoc::of(&t, p));
            }
            Ok(out)
        }
        Command::Invariant { input, mu, method } => {
            let t = inputs.relation(input)?;
            let mu = inputs.measure("mu", &t, mu)?;
            let mode = match method {
                ModeArg::Lp => InvarianceMode::Lp,
                ModeArg::Subsets => InvarianceMode::Subsets,
                ModeArg::Both => InvarianceMode::Both,
            };
            let r = corrpress::is_invariant(&mu, &t, mode)?;
            let mut out = json!({
                "invariant": r.invariant,
                "modes_agree": r.modes_agree,
                "violating_set": r.violating_set,
            });
            if let Some(nu) = &r.witness {
                out["witness"] = doc(&docs::PairDoc::of(&t, nu));
                let q = witness_kernel(&t, nu)?;
                out["witness_kernel"] = doc(&docs::KernelDoc::of(&q));
                out["stationarity_residual"] =
                    num(corrpress::kernel::stationarity_residual(&mu, &q)?);
            }
            Ok(out)
        }
        Command::Extremes { input, mu } => {
            let t = inputs.relation(input)?;
            let ext = corrpress::invariant_polytope_extremes(&t)?;
            let mut out = json!({
                "count": ext.len(),
                "extremes": ext.iter().map(measure_doc).collect::<Vec<_>>(),
            });
            if let Some(m) = mu {
                let mu = inputs.measure("mu", &t, m)?;
                let dec = corrpress::extremal_decomposition(&mu, &t)?;
                out["decomposition"] = Value::Array(
                    dec.iter()
                        .map(|(w, m)| json!({"weight": num(*w), "measure": measure_doc(m)}))
                        .collect(),
                );
            }
            Ok(out)
        }
        Command::Kentropy { input, kernel, mu, n } => {
            let t = inputs.relation(input)?;
            let q = inputs.kernel(&t, kernel)?;
            let mu = inputs.measure("mu", &t, mu)?;
            let k = corrpress::kernel_entropy(&mu, &q, *n, &Partition::discrete(t.n_states()))?;
            Ok(json!({
                "sequence": nums(&k.sequence),
                "limit": num(k.limit),
                "crosscheck_residual": num(k.crosscheck_residual),
            }))
        }
        Command::Derivative { input, phi, psi, method } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let psi = inputs.potential("psi", &t, Some(psi))?;
            let side = match method {
                SideArg::Plus => corrpress::Side::Plus,
                SideArg::Minus => corrpress::Side::Minus,
                SideArg::Both => corrpress::Side::Both,
            };
            let d = corrpress::directional_derivative(&t, &phi, &psi, side)?;
            let opt = |x: Option<f64>| x.map_or(Value::Null, num);
            Ok(json!({
                "plus": opt(d.plus),
                "minus": opt(d.minus),
                "fd_plus": opt(d.fd_plus),
                "fd_minus": opt(d.fd_minus),
                "consistent": d.consistent,
                "gateaux": d.gateaux,
                "tangent_count": d.tangent_count,
            }))
        }
        Command::Discretize { input, grid, method, partition } => discretize(inputs, input, *grid, *method, partition.as_deref()),
        Command::Relabel { input, phi, theta } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let theta: Vec<usize> = parse_list(theta, "theta")?;
            let (s, psi) = corrpress::relabel(&t, &phi, &theta)?;
            Ok(json!({
                "relation": doc(&docs::RelationDoc::of(&s)),
                "potential": doc(&docs::PotentialDoc::of(&s, &psi)),
                "pressure_before": num(corrpress::spectral_pressure(&t, &phi)?.pressure),
                "pressure_after": num(corrpress::spectral_pressure(&s, &psi)?.pressure),
            }))
        }
        Command::Decompose { input, phi, blocks } => {
            let t = inputs.relation(input)?;
            let phi = inputs.potential("phi", &t, phi.as_deref())?;
            let f = inputs.load("blocks", blocks)?;
            let blocks = f.parse::<docs::BlocksDoc>()?.build();
            let report = corrpress::decomposition_validate(&t, &blocks);
            let mut out = json!({"valid": report.passed, "failure": doc(&report.failure)});
            if report.passed {
                let (best, per_block) = corrpress::decomposition_pressure(&t, &phi, &blocks)?;
                let p = corrpress::spectral_pressure(&t, &phi)?.pressure;
                out["pressure"] = num(best);
                out["block_pressures"] = nums(&per_block);
                out["spectral_pressure"] = num(p);
                out["gap"] = num((best - p).abs());
            }
            Ok(out)
        }
    }
}

fn discretize(
    inputs: &mut Inputs,
    input: &str,
    grid: usize,
    method: DiscretizeMethod,
    partition: Option<&str>,
) -> Result<Value, Failure> {
    let fixture = input == EXAMPLE_FIXTURE;
    if method == DiscretizeMethod::Example {
        if !fixture {
            return Err(InputError::Usage(format!("the example method needs --input {EXAMPLE_FIXTURE}")).into());
        }
        inputs.digests.insert("input".into(), json!({"fixture": EXAMPLE_FIXTURE}));
        let r = corrpress::paper_example(grid)?;
        return Ok(example_doc(&r));
    }
    let (corr, maps) = if fixture {
        inputs.digests.insert("input".into(), json!({"fixture": EXAMPLE_FIXTURE}));
        (Some(corrpress::example_maps().correspondence()), Vec::new())
    } else {
        let f = inputs.load("input", Path::new(input))?;
        let d: docs::IntervalDoc = f.parse()?;
        let maps = d
            .branches()
            .into_iter()
            .map(docs::MapDoc::build)
            .collect::<corrpress::Result<Vec<_>>>()
            .map_err(|e| f.invalid(e))?;
        let corr = match method {
            DiscretizeMethod::Grid => Some(d.build().map_err(|e| f.invalid(e))?),
            _ => None,
        };
        (corr, maps)
    };
    match method {
        DiscretizeMethod::Grid => {
            let corr = corr.expect("built for the grid method");
            let g = corrpress::grid_discretize(&corr, grid)?;
            let p = corrpress::spectral_pressure(&g.relation, &Potential::zero(&g.relation))?;
            Ok(json!({
                "resolution": g.resolution,
                "pressure": num(p.pressure),
                "relation": doc(&docs::RelationDoc::of(&g.relation)),
            }))
        }
        DiscretizeMethod::Markov => {
            let [map] = maps.as_slice() else {
                return Err(InputError::Usage("the markov method needs a document with exactly one map".into()).into());
            };
            let part = partition
                .ok_or_else(|| InputError::Usage("the markov method needs --partition".into()))?
                .split(',')
                .map(docs::rational)
                .collect::<corrpress::Result<Vec<_>>>()?;
            let (t, p) = corrpress::markov_model(map, &part)?;
            Ok(json!({
                "pressure": num(p),
                "relation": doc(&docs::RelationDoc::of(&t)),
            }))
        }
        DiscretizeMethod::Example => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut inputs = Inputs::default();
    let name = match &cli.command {
        Command::Pressure { .. } => "pressure",
        Command::Verify { .. } => "verify",
        Command::Equilibrium { .. } => "equilibrium",
        Command::Mpressure { .. } => "mpressure",
        Command::Aentropy { .. } => "aentropy",
        Command::Invariant { .. } => "invariant",
        Command::Extremes { .. } => "extremes",
        Command::Kentropy { .. } => "kentropy",
        Command::Derivative { .. } => "derivative",
        Command::Discretize { .. } => "discretize",
        Command::Relabel { .. } => "relabel",
        Command::Decompose { .. } => "decompose",
    };
    let outcome = run(&cli.command, &mut inputs);
    let (results, error, code) = match outcome {
        Ok(v) => (v, None, 0),
        Err(f) => {
            let code = f.exit_code();
            let doc = f.doc();
            let results = match f {
                Failure::Verify(v) => v,
                _ => json!({}),
            };
            (results, Some(doc), code)
        }
    };
    let report = RunReport {
        command: name.into(),
        inputs: inputs.digests,
        results,
        status: if error.is_none() { "ok" } else { "error" }.into(),
        error,
    };
    let text = report.render();
    if cli.output == "-" {
        print!("{text}");
    } else {
        let written = std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&cli.output)
            .and_then(|mut f| f.write_all(text.as_bytes()));
        if let Err(e) = written {
            eprintln!("cannot write {}: {e}", cli.output);
            return ExitCode::from(2);
        }
    }
    if let Some(e) = &report.error {
        eprintln!("{}: {}", e.kind, e.message);
    }
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let core = |e| Failure::Core(e);
        assert_eq!(core(Error::ConvergenceFailure(500)).exit_code(), 3);
        assert_eq!(core(Error::ScalingDiverged("x".into())).exit_code(), 3);
        assert_eq!(core(Error::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(Failure::Input(InputError::Usage("x".into())).exit_code(), 2);
        assert_eq!(Failure::Verify(Value::Null).exit_code(), 1);
        let d = core(Error::ScalingDiverged("x".into())).doc();
        assert_eq!(d.kind, "ScalingDiverged");
    }
}
