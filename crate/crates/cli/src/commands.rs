use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use spiking_extinction::engine::{
    run_replicas, simulate_extinction_traced, Configuration, Horizon, ModelParams, Workers,
};
use spiking_extinction::experiments::{
    run_experiment, validation_suite, ExperimentName, ExperimentSpec, DEFAULT_SEED,
};
use spiking_extinction::network::{Network, NetworkKind};
use spiking_extinction::oracle::{
    beta_quantile, complete_graph_survival, count_chain_generator, expected_absorption, exponentiality_gap,
    full_state_generator, invariant_measure, survival_function, GapMethod, SubGenerator,
};
use spiking_extinction::output::{fmt_f64, CsvTable};
use spiking_extinction::rng::stream;
use spiking_extinction::stats::summarize_outcomes;

use crate::config::Settings;
use crate::{CliError, Quantity};

const SIMULATE_KEYS: &[&str] =
    &["graph", "n", "gamma", "replicas", "seed", "horizon", "out", "workers", "init", "trace"];
const ORACLE_KEYS: &[&str] = &["graph", "n", "gamma", "out", "tolerance", "init", "times", "points", "t_max"];
const EXPERIMENT_KEYS: &[&str] = &[
    "n",
    "gamma",
    "gammas",
    "ks",
    "times",
    "replicas",
    "seed",
    "horizon",
    "out",
    "workers",
    "cv_threshold",
];
const VALIDATE_KEYS: &[&str] = &["seed", "out"];

/// Keys left out of CSV provenance lines so that bytes do not depend on them.
const NON_PROVENANCE: &[&str] = &["out", "workers", "trace"];

const DEFAULT_REPLICAS: usize = 1000;
const DEFAULT_TOLERANCE: f64 = 1e-12;
const DEFAULT_POINTS: usize = 101;

/// Replaces `seed` by a concrete value: the default, or entropy for `random`.
fn resolve_seed(s: &mut Settings) -> Result<u64, CliError> {
    let seed = match s.raw("seed") {
        None => DEFAULT_SEED,
        Some("random") => rand::random(),
        Some(_) => s.require::<u64>("seed")?,
    };
    s.overlay_flags([("seed", seed.to_string())]);
    Ok(seed)
}

fn workers(s: &Settings) -> Result<Workers, CliError> {
    match s.get::<usize>("workers")? {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => Ok(Workers::fixed(w)),
        None => Ok(Workers::default()),
    }
}

/// Fails early when the parent directory of an output path is missing.
fn check_writable(path: Option<&str>) -> Result<(), CliError> {
    let Some(p) = path else { return Ok(()) };
    let parent = Path::new(p).parent().filter(|d| !d.as_os_str().is_empty());
    match parent {
        Some(d) if !d.is_dir() => Err(CliError::Usage(format!("cannot write {p}: directory {} does not exist", d.display()))),
        _ if Path::new(p).is_dir() => Err(CliError::Usage(format!("cannot write {p}: it is a directory"))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn provenance(table: &mut CsvTable, command: &str, s: &Settings) {
    let mut lines = vec![("command".to_string(), command.to_string()), ("version".into(), env!("CARGO_PKG_VERSION").into())];
    lines.extend(
        s.resolved()
            .into_iter()
            .filter(|(k, _)| !NON_PROVENANCE.contains(&k.as_str()))
            .map(|(k, v)| (format!("config.{k}"), v)),
    );
    lines.append(&mut table.comments);
    table.comments = lines;
}

/// Writes the CSV to `--out` (plus a JSON summary beside it) or to stdout.
fn emit(table: &CsvTable, summary: Value, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    match s.raw("out") {
        Some(p) => {
            let path = Path::new(p);
            write_file(path, table.to_string_lossy().as_bytes())?;
            let text = serde_json::to_string_pretty(&summary).expect("json") + "\n";
            write_file(&path.with_extension("json"), text.as_bytes())
        }
        None => {
            out.write_all(table.to_string_lossy().as_bytes())
                .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn summary(name: &str, params: Value, seed: Option<u64>, rows: Value, pass: Option<bool>, s: &Settings, start: Instant) -> Value {
    json!({
        "name": name,
        "params": params,
        "seed": seed,
        "rows": rows,
        "pass": pass,
        "config": s.resolved(),
        "version": env!("CARGO_PKG_VERSION"),
        "runtime_s": start.elapsed().as_secs_f64(),
    })
}

enum Graph {
    Lattice,
    Complete,
    Custom(String),
}

fn graph(s: &Settings, default: &str) -> Result<Graph, CliError> {
    let g = s.raw("graph").unwrap_or(default);
    match g {
        "lattice" => Ok(Graph::Lattice),
        "complete" => Ok(Graph::Complete),
        _ => match g.strip_prefix("custom:") {
            Some(p) if !p.is_empty() => Ok(Graph::Custom(p.to_string())),
            _ => Err(CliError::Usage(format!("--graph must be lattice, complete or custom:<path>, got {g:?}"))),
        },
    }
}

fn network(s: &Settings, default: &str) -> Result<Network, CliError> {
    match graph(s, default)? {
        Graph::Lattice => Ok(Network::lattice(s.require("n")?)),
        Graph::Complete => Ok(Network::complete(s.require("n")?)?),
        Graph::Custom(p) => {
            if s.raw("n").is_some() {
                return Err(CliError::Usage("--n conflicts with --graph custom:<path>; the size comes from the file".into()));
            }
            Network::from_adjacency_file(&p).map_err(|e| CliError::Usage(format!("{p}: {e}")))
        }
    }
}

fn gamma(s: &Settings) -> Result<ModelParams, CliError> {
    let g = s.positive("gamma")?.ok_or_else(|| CliError::Usage("missing required --gamma".into()))?;
    Ok(ModelParams::new(g)?)
}

fn init(s: &Settings, net: &Network) -> Result<Configuration, CliError> {
    match s.raw("init") {
        None | Some("full") => Ok(Configuration::full(net.size())),
        Some(_) => {
            let labels = s.list::<i64>("init")?.expect("present");
            Ok(Configuration::from_labels(net, labels)?)
        }
    }
}

fn horizon(s: &Settings) -> Result<Horizon, CliError> {
    Ok(s.positive("horizon")?.map_or(Horizon::Unbounded, Horizon::Finite))
}

pub fn simulate(mut s: Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.restrict(SIMULATE_KEYS, "simulate")?;
    let start = Instant::now();
    let seed = resolve_seed(&mut s)?;
    s.set_default("graph", "complete");
    let net = network(&s, "complete")?;
    let params = gamma(&s)?;
    let replicas = s.get::<usize>("replicas")?.unwrap_or(DEFAULT_REPLICAS);
    if replicas == 0 {
        return Err(CliError::Usage("--replicas must be at least 1".into()));
    }
    let horizon = horizon(&s)?;
    let init = init(&s, &net)?;
    let workers = workers(&s)?;
    check_writable(s.raw("out"))?;
    check_writable(s.raw("trace"))?;

    let outcomes = run_replicas(&net, params, &init, replicas, seed, horizon, workers)?;
    let mut t = CsvTable::new(["replica", "status", "time", "events"]);
    for (i, o) in outcomes.iter().enumerate() {
        t.push(vec![i.to_string(), o.status.as_str().to_string(), fmt_f64(o.time), o.events.to_string()]);
    }
    let extinct = outcomes.iter().filter(|o| o.is_extinct()).count();
    let (mean, se) = summarize_outcomes(&outcomes).map_or((f64::NAN, f64::NAN), |x| (x.mean, x.std_error));
    provenance(&mut t, "simulate", &s);
    t.comment("network", net.describe());
    t.comment("seed", seed);
    t.comment("extinct", extinct);
    t.comment("censored", replicas - extinct);
    t.comment("mean", fmt_f64(mean));
    t.comment("se", fmt_f64(se));

    if let Some(p) = s.raw("trace") {
        // Same stream as replica 0, so the trace replays that row.
        let mut buf = Vec::new();
        simulate_extinction_traced(&net, params, &init, &mut stream(seed, 0), horizon, &mut buf)?;
        write_file(Path::new(p), &buf)?;
    }
    let params_json = json!({
        "network": net.describe(),
        "gamma": params.gamma(),
        "replicas": replicas,
        "horizon": horizon.limit(),
    });
    let rows = json!([{ "extinct": extinct, "censored": replicas - extinct, "mean": mean, "se": se }]);
    emit(&t, summary("simulate", params_json, Some(seed), rows, None, &s, start), &s, out)
}

/// The chain an oracle query runs on, with the start distribution.
enum Chain {
    Count { n: usize, count: usize, gen: SubGenerator },
    Full { gen: SubGenerator },
}

impl Chain {
    fn gen(&self) -> &SubGenerator {
        match self {
            Chain::Count { gen, .. } | Chain::Full { gen } => gen,
        }
    }

    /// Complete graph started from all neurons active, where the
    /// regenerative analysis applies.
    fn complete_full(&self) -> Option<usize> {
        match self {
            Chain::Count { n, count, .. } if n == count && *n >= 3 => Some(*n),
            _ => None,
        }
    }
}

fn chain(net: &Network, params: ModelParams, init: &Configuration) -> Result<(Chain, Vec<f64>), CliError> {
    if init.is_extinct() {
        return Err(CliError::Usage("--init must activate at least one neuron".into()));
    }
    match net.kind() {
        NetworkKind::Complete { n } => {
            let c = count_chain_generator(n, params.gamma())?;
            let start = c.start(init.count())?;
            Ok((Chain::Count { n, count: init.count(), gen: c.generator().clone() }, start))
        }
        _ => {
            let gen = full_state_generator(net, params)?;
            let start = gen.point_mass(init.mask())?;
            Ok((Chain::Full { gen }, start))
        }
    }
}

pub fn oracle(q: Quantity, mut s: Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.restrict(ORACLE_KEYS, "oracle")?;
    let start = Instant::now();
    s.set_default("graph", "complete");
    let g = s.positive("gamma")?.ok_or_else(|| CliError::Usage("missing required --gamma".into()))?;
    check_writable(s.raw("out"))?;

    let mut t;
    let mut params = json!({ "quantity": q.as_str(), "gamma": g });
    if q == Quantity::Invariant {
        if !matches!(graph(&s, "complete")?, Graph::Complete) {
            return Err(CliError::Usage("oracle invariant is defined for --graph complete only".into()));
        }
        let n: usize = s.require("n")?;
        let mu = invariant_measure(n, g)?;
        t = CsvTable::new(["k", "mu"]);
        for (k, m) in mu.mu.iter().enumerate() {
            t.push(vec![(k + 1).to_string(), fmt_f64(*m)]);
        }
        params["n"] = json!(n);
    } else {
        let net = network(&s, "complete")?;
        let mp = ModelParams::new(g)?;
        let init = init(&s, &net)?;
        let (chain, p0) = chain(&net, mp, &init)?;
        params["network"] = json!(net.describe());
        let mean = expected_absorption(chain.gen(), &p0)?;
        match q {
            Quantity::Mean => {
                t = CsvTable::new(["quantity", "value"]);
                t.push(vec!["mean".into(), fmt_f64(mean)]);
            }
            Quantity::Beta => {
                let beta = match chain.complete_full() {
                    Some(n) => exponentiality_gap(n, g)?.beta,
                    None => beta_quantile(chain.gen(), &p0)?,
                };
                t = CsvTable::new(["quantity", "value"]);
                t.push(vec!["beta".into(), fmt_f64(beta)]);
            }
            Quantity::Gap => {
                let n = chain.complete_full().ok_or_else(|| {
                    CliError::Usage("oracle gap needs --graph complete, n >= 3 and the full initial state".into())
                })?;
                let r = exponentiality_gap(n, g)?;
                t = CsvTable::new(["quantity", "value"]);
                for (k, v) in [
                    ("mean", r.mean),
                    ("beta", r.beta),
                    ("ratio", r.ratio()),
                    ("ratio_minus_one", r.ratio_minus_one),
                    ("sup_distance", r.sup_distance),
                ] {
                    t.push(vec![k.into(), fmt_f64(v)]);
                }
                t.comment("method", r.method.as_str());
            }
            Quantity::Survival => {
                let times = match s.list::<f64>("times")? {
                    Some(ts) => ts,
                    None => {
                        let t_max = s.positive("t_max")?.unwrap_or(4.0 * mean);
                        let points = s.get::<usize>("points")?.unwrap_or(DEFAULT_POINTS);
                        if points < 2 {
                            return Err(CliError::Usage("--points must be at least 2".into()));
                        }
                        (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect()
                    }
                };
                if let Some(x) = times.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                    return Err(CliError::Usage(format!("survival times must be finite and non-negative, got {x}")));
                }
                if times.windows(2).any(|w| w[1] < w[0]) {
                    return Err(CliError::Usage("--times must be increasing".into()));
                }
                let tol = s.positive("tolerance")?.unwrap_or(DEFAULT_TOLERANCE);
                let curve = match chain.complete_full() {
                    Some(n) => {
                        let (c, method) = complete_graph_survival(n, g, &times, tol)?;
                        t = CsvTable::new(["t", "prob"]);
                        t.comment("method", method.as_str());
                        c
                    }
                    None => {
                        t = CsvTable::new(["t", "prob"]);
                        t.comment("method", GapMethod::Uniformization.as_str());
                        survival_function(chain.gen(), &p0, &times, tol)?
                    }
                };
                t.comment("max_error", fmt_f64(curve.tolerance));
                for (x, p) in curve.times.iter().zip(&curve.probs) {
                    t.push(vec![fmt_f64(*x), fmt_f64(*p)]);
                }
            }
            Quantity::Invariant => unreachable!("handled above"),
        }
    }
    provenance(&mut t, &format!("oracle {}", q.as_str()), &s);
    let rows = table_json(&t);
    emit(&t, summary(&format!("oracle_{}", q.as_str()), params, None, rows, None, &s, start), &s, out)
}

fn table_json(t: &CsvTable) -> Value {
    t.rows
        .iter()
        .map(|r| {
            let m: serde_json::Map<String, Value> = t
                .header
                .iter()
                .zip(r)
                .map(|(h, c)| (h.clone(), c.parse::<f64>().map_or_else(|_| json!(c), |x| json!(x))))
                .collect();
            Value::Object(m)
        })
        .collect()
}

pub fn experiment(name: &str, mut s: Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let name: ExperimentName = name.parse().map_err(|e: spiking_extinction::Error| CliError::Usage(e.to_string()))?;
    s.restrict(EXPERIMENT_KEYS, "experiment")?;
    let seed = resolve_seed(&mut s)?;
    let mut spec = ExperimentSpec::defaults(name);
    spec.seed = seed;
    if let Some(ns) = s.list::<usize>("n")? {
        spec.ns = ns;
    }
    if let Some(g) = s.get::<f64>("gamma")? {
        spec.gamma = g;
    }
    if let Some(gs) = s.list::<f64>("gammas")? {
        spec.gammas = gs;
    }
    if let Some(ks) = s.list::<usize>("ks")? {
        spec.ks = ks;
    }
    if let Some(ts) = s.list::<f64>("times")? {
        spec.times = ts;
    }
    if let Some(r) = s.get::<usize>("replicas")? {
        spec.replicas = r;
    }
    if let Some(h) = s.get::<f64>("horizon")? {
        spec.horizon = Some(h);
    }
    if let Some(c) = s.get::<f64>("cv_threshold")? {
        spec.cv_threshold = c;
    }
    let workers = workers(&s)?;
    spec.validate()?;
    check_writable(s.raw("out"))?;

    let result = run_experiment(&spec, workers)?;
    let mut t = result.to_csv();
    provenance(&mut t, "experiment", &s);
    let mut j = result.to_json();
    j["config"] = json!(s.resolved());
    emit(&t, j, &s, out)?;
    for c in &result.checks {
        let _ = writeln!(err, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match result.pass {
        Some(false) => Err(CliError::Failed(format!(
            "{name}: {} of {} checks failed",
            result.checks.iter().filter(|c| !c.pass).count(),
            result.checks.len()
        ))),
        _ => Ok(()),
    }
}

pub fn validate(mut s: Settings, out: &mut dyn Write) -> Result<(), CliError> {
    s.restrict(VALIDATE_KEYS, "validate")?;
    let start = Instant::now();
    let seed = resolve_seed(&mut s)?;
    check_writable(s.raw("out"))?;
    let report = validation_suite(seed)?;
    let mut t = report.to_csv();
    provenance(&mut t, "validate", &s);
    t.comment("seed", seed);
    t.comment("pass", report.pass());
    let rows = serde_json::to_value(&report.rows).expect("json");
    emit(&t, summary("validate", json!({}), Some(seed), rows, Some(report.pass()), &s, start), &s, out)?;
    if report.pass() {
        Ok(())
    } else {
        let bad: Vec<&str> = report.rows.iter().filter(|r| !r.pass()).map(|r| r.check).collect();
        Err(CliError::Failed(format!("violated: {}", bad.join(", "))))
    }
}
