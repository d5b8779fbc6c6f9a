//! Acceptance criteria, one verdict line each. Exits non-zero if any fails.

use std::path::Path;
use std::time::Duration;

use spiking_extinction::engine::{simulate_extinction, CompleteGraphSampler, Configuration, Horizon, ModelParams, Workers};
use spiking_extinction::experiments::validation::{coupling_identities, lumping_gap, COUPLING_TIMELINES};
use spiking_extinction::experiments::{run_experiment, ExperimentName, ExperimentResult, ExperimentSpec, DEFAULT_SEED};
use spiking_extinction::network::Network;
use spiking_extinction::oracle::{
    complete_graph_survival, count_chain_generator, expected_absorption, exponentiality_gap, invariant_measure,
    modified_chain, top_mass_lower_bound,
};
use spiking_extinction::rng::derive_seed;
use spiking_extinction::stats::{dkw_band, summarize, survival_sup_distance_sorted, KS_CRITICAL_1PCT};
use spiking_extinction_acceptance::{evaluate, Criterion, Verdict};

const GAMMAS: [f64; 3] = [0.5, 1.0, 2.0];

fn e(x: f64) -> String {
    format!("{x:.3e}")
}

fn c1_oracle_cross_validation() -> Verdict {
    let mut v = Verdict::new();
    let (mut worst_rel, mut worst_sup) = (0.0f64, 0.0f64);
    for n in [2, 3, 4] {
        for g in GAMMAS {
            let (rel, sup) = lumping_gap(n, g).expect("oracles run");
            v.check(rel <= 1e-10, format!("N={n} gamma={g}: mean rel {} > 1e-10", e(rel)));
            v.check(sup <= 1e-8, format!("N={n} gamma={g}: survival sup {} > 1e-8", e(sup)));
            worst_rel = worst_rel.max(rel);
            worst_sup = worst_sup.max(sup);
        }
    }
    v.note(format!("max mean rel {} (<= 1e-10), max survival sup {} (<= 1e-8)", e(worst_rel), e(worst_sup)));
    v
}

/// Neuron-level simulation while the expected event count stays below this.
const ENGINE_EVENT_BUDGET: f64 = 5e8;

fn c2_mc_oracle_equivalence() -> Verdict {
    const REPLICAS: usize = 10_000;
    let mut v = Verdict::new();
    let dkw = dkw_band(REPLICAS, 0.01).unwrap();
    let mut worst_z = 0.0f64;
    let mut worst_band = 0.0f64;
    let mut samplers = Vec::new();
    for n in [2usize, 10, 50] {
        for g in GAMMAS {
            let chain = count_chain_generator(n, g).unwrap();
            let mean = expected_absorption(chain.generator(), &chain.full_start()).unwrap();
            if n == 2 && g == 1.0 {
                v.check((mean - 1.25).abs() < 1e-12, format!("E(sigma_2) = {mean}, expected 1.25"));
            }
            let seed = derive_seed(DEFAULT_SEED, (n as u64) << 32 | g.to_bits() >> 32);
            let events = mean * n as f64 * (1.0 + g) * REPLICAS as f64;
            let samples = if events <= ENGINE_EVENT_BUDGET {
                samplers.push(format!("{n}/{g}:engine"));
                let net = Network::complete(n).unwrap();
                let params = ModelParams::new(g).unwrap();
                let init = Configuration::full(n);
                Workers::default()
                    .map_replicas(REPLICAS, seed, |_, rng| {
                        simulate_extinction(&net, params, &init, rng, Horizon::Unbounded).unwrap().time
                    })
                    .unwrap()
            } else {
                samplers.push(format!("{n}/{g}:lumped"));
                let s = CompleteGraphSampler::new(n, g).unwrap();
                Workers::default().map_replicas(REPLICAS, seed, |_, rng| s.sample(rng)).unwrap()
            };
            let s = summarize(&samples).unwrap();
            let z = (s.mean - mean).abs() / s.std_error;
            v.check(z <= 4.0, format!("N={n} gamma={g}: MC mean {} vs {} is {z:.2} SE", e(s.mean), e(mean)));
            let mut sorted = samples;
            sorted.sort_by(f64::total_cmp);
            let (curve, _) = complete_graph_survival(n, g, &sorted, 1e-10).unwrap();
            let d = survival_sup_distance_sorted(&sorted, &curve.probs).unwrap();
            v.check(
                d <= dkw + curve.tolerance,
                format!("N={n} gamma={g}: survival distance {} outside DKW band {}", e(d), e(dkw)),
            );
            worst_z = worst_z.max(z);
            worst_band = worst_band.max(d / dkw);
        }
    }
    v.note(format!(
        "E(sigma_2)=1.25 at gamma=1; worst mean deviation {worst_z:.2} SE (<= 4); worst survival distance {worst_band:.2} of the 1% DKW half-width {}",
        e(dkw)
    ));
    v.note(format!("samplers {}", samplers.join(" ")));
    v
}

fn c3_invariant_measure() -> Verdict {
    let mut v = Verdict::new();
    let (mut res, mut norm, mut bounds) = (0.0f64, 0.0f64, 0);
    for n in [3usize, 10, 100, 1000] {
        for g in GAMMAS {
            let mu = invariant_measure(n, g).unwrap();
            let q = modified_chain(n, g).unwrap();
            let r = q.left_apply(&mu.mu).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let dev = (mu.mu.iter().sum::<f64>() - 1.0).abs();
            v.check(r <= 1e-10, format!("N={n} gamma={g}: |mu Q| = {}", e(r)));
            v.check(dev <= 1e-12, format!("N={n} gamma={g}: |sum mu - 1| = {}", e(dev)));
            v.check(mu.get(n) == 0.0, format!("N={n} gamma={g}: mu_N = {}", mu.get(n)));
            if let Some(b) = top_mass_lower_bound(n, g) {
                bounds += 1;
                v.check(mu.get(n - 1) >= b, format!("N={n} gamma={g}: mu_(N-1) = {} < {}", e(mu.get(n - 1)), e(b)));
            }
            res = res.max(r);
            norm = norm.max(dev);
        }
    }
    v.note(format!("max |mu Q| {} (<= 1e-10), max |sum - 1| {} (<= 1e-12), mu_N = 0, top-mass bound held in {bounds} cases", e(res), e(norm)));
    v
}

fn c4_exact_exponentiality() -> Verdict {
    let mut v = Verdict::new();
    for g in GAMMAS {
        let gaps: Vec<_> = [10, 50, 200].iter().map(|&n| exponentiality_gap(n, g).unwrap()).collect();
        let d: Vec<f64> = gaps.iter().map(|x| x.sup_distance).collect();
        v.check(d.windows(2).all(|w| w[1] < w[0]), format!("gamma={g}: sup distances not decreasing {d:?}"));
        let (r10, r200) = (gaps[0].ratio_minus_one.abs(), gaps[2].ratio_minus_one.abs());
        v.check(r200 < r10, format!("gamma={g}: |E/beta - 1| {} at N=200 not below {} at N=10", e(r200), e(r10)));
        v.note(format!(
            "gamma={g}: sup {} > {} > {}, |E/beta-1| {} -> {}",
            e(d[0]),
            e(d[1]),
            e(d[2]),
            e(r10),
            e(r200)
        ));
    }
    v
}

fn experiment(name: ExperimentName, edit: impl FnOnce(&mut ExperimentSpec)) -> ExperimentResult {
    let mut spec = ExperimentSpec::defaults(name);
    edit(&mut spec);
    run_experiment(&spec, Workers::default()).expect("experiment runs")
}

fn c5_mc_exponentiality() -> Verdict {
    let mut v = Verdict::new();
    let r = experiment(ExperimentName::CompleteExponentiality, |s| {
        s.gamma = 1.0;
        s.ns = vec![10, 200];
        s.replicas = 20_000;
    });
    let ks = r.floats("ks_stat").unwrap();
    let crit = KS_CRITICAL_1PCT / (20_000f64).sqrt();
    v.check(ks[1] < 3.0 * crit, format!("KS {} at N=200 >= 3 * {}", e(ks[1]), e(crit)));
    v.check(ks[1] < ks[0], format!("KS {} at N=200 not below {} at N=10", e(ks[1]), e(ks[0])));
    v.note(format!("KS N=200 {} < 3 * {} and < KS N=10 {}", e(ks[1]), e(crit), e(ks[0])));
    v
}

fn c6_lattice_concentration() -> Verdict {
    let mut v = Verdict::new();
    let r = experiment(ExperimentName::LatticeConcentration, |s| {
        s.gamma = 2.0;
        s.ns = vec![50, 100, 200, 400];
        s.replicas = 2000;
        s.cv_threshold = 0.15;
    });
    for c in &r.checks {
        v.check(c.pass, format!("{}: {}", c.name, c.detail));
    }
    let vars = r.floats("var_ratio").unwrap();
    let cv = r.floats("cv").unwrap();
    let means = r.floats("mean_ratio").unwrap();
    v.note(format!(
        "var(tau/log(2N+1)) {:?}; CV {:?}; mean ratio {:?}",
        vars.iter().map(|x| e(*x)).collect::<Vec<_>>(),
        cv.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
        means.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()
    ));
    v
}

fn c7_branching_bound() -> Verdict {
    let mut v = Verdict::new();
    for g in [1.2, 2.0] {
        let r = experiment(ExperimentName::SurvivalBound, |s| {
            s.gamma = g;
            s.ns = vec![50];
            s.times = vec![0.5, 1.0, 2.0, 3.0];
            s.replicas = 100_000;
        });
        for c in &r.checks {
            v.check(c.pass, format!("gamma={g} {}: {}", c.name, c.detail));
        }
        let emp = r.floats("empirical").unwrap();
        let bound = r.floats("bound").unwrap();
        v.note(format!(
            "gamma={g}: {}",
            emp.iter().zip(&bound).map(|(a, b)| format!("{a:.4}<={b:.4}")).collect::<Vec<_>>().join(" ")
        ));
    }
    v
}

fn c8_ek() -> Verdict {
    let mut v = Verdict::new();
    let r = experiment(ExperimentName::Ek, |s| {
        s.gamma = 1.0;
        s.ns = vec![10];
        s.ks = vec![1, 2, 5];
        s.replicas = 100_000;
    });
    for c in &r.checks {
        v.check(c.pass, format!("{}: {}", c.name, c.detail));
    }
    let emp = r.floats("empirical").unwrap();
    let target = r.floats("target").unwrap();
    let se = r.floats("se").unwrap();
    v.note(
        emp.iter()
            .zip(&target)
            .zip(&se)
            .zip([1, 2, 5])
            .map(|(((a, t), s), k)| format!("k={k}: {a:.5} vs {t:.5} ({:.2} SE)", (a - t).abs() / s))
            .collect::<Vec<_>>()
            .join(", "),
    );
    v
}

fn c9_coupling() -> Verdict {
    let mut v = Verdict::new();
    let r = coupling_identities(DEFAULT_SEED).unwrap();
    v.check(r.timelines == 2 * COUPLING_TIMELINES, format!("{} timelines", r.timelines));
    v.check(r.additivity_checks > 0 && r.monotonicity_checks > 0, "no identities checked");
    v.check(r.additivity_violations == 0, format!("{} additivity violations", r.additivity_violations));
    v.check(r.monotonicity_violations == 0, format!("{} monotonicity violations", r.monotonicity_violations));
    v.check(r.extinction_violations == 0, format!("{} extinction-time violations", r.extinction_violations));
    v.note(format!(
        "{} timelines, additivity {}/{} clean, monotonicity {}/{} clean, extinction times {}/{} clean",
        r.timelines,
        r.additivity_checks - r.additivity_violations,
        r.additivity_checks,
        r.monotonicity_checks - r.monotonicity_violations,
        r.monotonicity_checks,
        r.extinction_checks - r.extinction_violations,
        r.extinction_checks
    ));
    v
}

/// Runs the CLI in-process with `--out dir/tag.csv`; returns the CSV bytes
/// and, if a trace was requested, the trace bytes.
fn cli_bytes(dir: &Path, tag: &str, args: &[&str], trace: bool) -> (u8, Vec<u8>, Vec<u8>) {
    let out = dir.join(format!("{tag}.csv"));
    let tr = dir.join(format!("{tag}.trace.csv"));
    let mut argv = vec!["spikext".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".into(), out.display().to_string()]);
    if trace {
        argv.extend(["--trace".into(), tr.display().to_string()]);
    }
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = spikext::run_with(&argv, &mut o, &mut e);
    let csv = std::fs::read(&out).unwrap_or_default();
    let trace = if trace { std::fs::read(&tr).unwrap_or_default() } else { Vec::new() };
    (code, csv, trace)
}

fn c10_determinism() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let parallel: [(&[&str], bool); 7] = [
        (&["simulate", "--graph", "lattice", "--n", "5", "--gamma", "1.5", "--replicas", "2000", "--seed", "11"], true),
        (&["simulate", "--graph", "complete", "--n", "8", "--gamma", "1", "--replicas", "2000", "--seed", "12"], true),
        (&["experiment", "lattice_concentration", "--n", "5,10", "--replicas", "200", "--seed", "13"], false),
        (&["experiment", "complete_exponentiality", "--n", "5,40", "--replicas", "1000", "--seed", "14"], false),
        (&["experiment", "survival_bound", "--n", "10", "--replicas", "2000", "--seed", "15"], false),
        (&["experiment", "ek", "--replicas", "2000", "--seed", "16"], false),
        (&["experiment", "gamma_scan", "--n", "5", "--gammas", "0.5,2", "--horizon", "50", "--replicas", "100", "--seed", "17"], false),
    ];
    let serial: [&[&str]; 6] = [
        &["oracle", "mean", "--graph", "lattice", "--n", "2", "--gamma", "1.5"],
        &["oracle", "survival", "--n", "40", "--gamma", "1", "--t-max", "1e9"],
        &["oracle", "beta", "--n", "12", "--gamma", "1"],
        &["oracle", "invariant", "--n", "50", "--gamma", "0.5"],
        &["oracle", "gap", "--n", "60", "--gamma", "1"],
        &["validate", "--seed", "18"],
    ];
    let mut runs = 0;
    for (i, (args, trace)) in parallel.iter().enumerate() {
        let mut seen = Vec::new();
        for (j, w) in ["1", "4", "1", "4"].iter().enumerate() {
            let mut a = args.to_vec();
            a.extend(["--workers", w]);
            let (code, csv, tr) = cli_bytes(dir.path(), &format!("p{i}_{j}"), &a, *trace);
            v.check(!csv.is_empty(), format!("{}: no output (exit {code})", args.join(" ")));
            seen.push((csv, tr));
            runs += 1;
        }
        v.check(seen.windows(2).all(|w| w[0] == w[1]), format!("{}: bytes differ across runs or workers", args.join(" ")));
    }
    for (i, args) in serial.iter().enumerate() {
        let a = cli_bytes(dir.path(), &format!("s{i}_a"), args, false);
        let b = cli_bytes(dir.path(), &format!("s{i}_b"), args, false);
        v.check(a.0 == 0 && !a.1.is_empty(), format!("{}: exit {}", args.join(" "), a.0));
        v.check(a.1 == b.1, format!("{}: bytes differ across runs", args.join(" ")));
        runs += 2;
    }
    v.note(format!(
        "{runs} invocations: {} seeded commands identical over two runs at workers 1 and 4, {} deterministic commands identical over two runs",
        parallel.len(),
        serial.len()
    ));
    v
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, title: "oracle cross-validation", budget: secs(60), run: c1_oracle_cross_validation },
        Criterion { id: 2, title: "MC-oracle equivalence", budget: secs(300), run: c2_mc_oracle_equivalence },
        Criterion { id: 3, title: "invariant measure", budget: secs(10), run: c3_invariant_measure },
        Criterion { id: 4, title: "exponentiality, exact", budget: secs(120), run: c4_exact_exponentiality },
        Criterion { id: 5, title: "exponentiality, Monte Carlo", budget: secs(300), run: c5_mc_exponentiality },
        Criterion { id: 6, title: "lattice concentration", budget: secs(600), run: c6_lattice_concentration },
        Criterion { id: 7, title: "branching bound", budget: secs(300), run: c7_branching_bound },
        Criterion { id: 8, title: "E_k probability", budget: secs(120), run: c8_ek },
        Criterion { id: 9, title: "coupling identities", budget: secs(60), run: c9_coupling },
        Criterion { id: 10, title: "determinism", budget: secs(120), run: c10_determinism },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let line = evaluate(c);
        println!("{line}");
        if !line.pass {
            failed.push(c.id);
        }
    }
    println!(
        "acceptance: {} of {} criteria pass{}",
        criteria.len() - failed.len(),
        criteria.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
