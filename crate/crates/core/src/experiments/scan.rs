use super::{Cell, ExperimentResult, ExperimentSpec};
use crate::engine::{run_replicas, Configuration, Horizon, ModelParams, Workers};
use crate::error::Result;
use crate::network::Network;
use crate::rng::derive_seed;
use crate::stats::summarize_outcomes;

/// Mean lattice extinction time across a grid of leak rates. Descriptive:
/// the critical rate belongs to the infinite lattice, so there is no verdict.
pub fn gamma_scan(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    let n = spec.ns[0];
    let net = Network::lattice(n);
    let init = Configuration::full(net.size());
    let horizon = Horizon::Finite(spec.horizon.expect("validated"));
    let mut res = ExperimentResult::new(spec, vec!["gamma", "mean", "se", "censored_fraction", "replicas"]);
    let mut means = Vec::new();
    for &g in &spec.gammas {
        let params = ModelParams::new(g)?;
        let outcomes = run_replicas(&net, params, &init, spec.replicas, derive_seed(spec.seed, g.to_bits()), horizon, workers)?;
        let censored = outcomes.iter().filter(|o| !o.is_extinct()).count();
        let (mean, se) = match summarize_outcomes(&outcomes) {
            Ok(s) => (s.mean, s.std_error),
            Err(_) => (f64::NAN, f64::NAN),
        };
        res.push(vec![
            g.into(),
            mean.into(),
            se.into(),
            (censored as f64 / spec.replicas as f64).into(),
            Cell::from(spec.replicas),
        ]);
        means.push((g, mean, se));
    }
    // Means exclude censored runs, so with censoring they understate the truth.
    let mut sorted = means.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted
        .windows(2)
        .all(|w| !(w[1].1 > w[0].1 + 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt()));
    res.note("monotone_within_2se", monotone);
    res.note("mean", "over extinct replicas only");
    Ok(res)
}
