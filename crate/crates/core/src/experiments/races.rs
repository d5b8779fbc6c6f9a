//! Experiments whose target is a closed-form probability.

use super::{within, Cell, Check, ExperimentResult, ExperimentSpec};
use crate::engine::{simulate_extinction, Configuration, EventKind, Horizon, ModelParams, Trajectory, Workers};
use crate::error::Result;
use crate::network::Network;
use crate::oracle::{branching_bound, ek_probability};
use crate::output::fmt_f64;
use crate::rng::derive_seed;

/// Survival from the central neuron of the lattice against `e^{-(gamma-1)t}`.
pub fn survival_bound(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    let params = ModelParams::new(spec.gamma)?;
    let n = spec.ns[0];
    let net = Network::lattice(n);
    let init = Configuration::from_labels(&net, [0])?;
    let t_max = spec.times.iter().copied().fold(0.0, f64::max);
    // One run per replica up to the last probe: alive at t iff extinct after t.
    let ends = workers.map_replicas(spec.replicas, derive_seed(spec.seed, n as u64), |_, rng| {
        let o = simulate_extinction(&net, params, &init, rng, Horizon::Finite(t_max)).expect("finite horizon");
        if o.is_extinct() { o.time } else { f64::INFINITY }
    })?;
    let mut res = ExperimentResult::new(spec, vec!["t", "empirical", "bound", "se", "pass"]);
    let r = spec.replicas as f64;
    for (i, &t) in spec.times.iter().enumerate() {
        let alive = ends.iter().filter(|&&e| e > t).count() as f64;
        let p = alive / r;
        let se = (p * (1.0 - p) / r).sqrt();
        let bound = branching_bound(spec.gamma, t)?.value;
        let pass = p <= bound + 3.0 * se;
        res.push(vec![t.into(), p.into(), bound.into(), se.into(), pass.into()]);
        res.checks.push(Check::new(
            &format!("bound_t{i}"),
            pass,
            format!("t={}: {} <= {} + 3 * {}", fmt_f64(t), fmt_f64(p), fmt_f64(bound), fmt_f64(se)),
        ));
    }
    res.note("init", "{0}");
    res.conclude();
    Ok(res)
}

/// Fraction of runs from `k` active neurons on `K_N` that die before any
/// spike, against `(gamma / (1 + gamma))^k`.
pub fn ek(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    let params = ModelParams::new(spec.gamma)?;
    let n = spec.ns[0];
    let net = Network::complete(n)?;
    let mut res = ExperimentResult::new(spec, vec!["k", "empirical", "target", "se", "pass"]);
    let r = spec.replicas as f64;
    for &k in &spec.ks {
        let init = Configuration::from_indices(n, 0..k);
        // A run can stop at its first spike: from then on E_k has failed.
        let hits = workers.map_replicas(spec.replicas, derive_seed(spec.seed, k as u64), |_, rng| {
            let mut traj = Trajectory::new(&net, params, init.clone(), rng);
            loop {
                match traj.step() {
                    None => return true,
                    Some(ev) if ev.kind == EventKind::Spike => return false,
                    Some(_) => {}
                }
            }
        })?;
        let p = hits.iter().filter(|h| **h).count() as f64 / r;
        let target = ek_probability(n, spec.gamma, k)?;
        // Standard error under the target probability.
        let se = (target * (1.0 - target) / r).sqrt();
        let check = within(&format!("ek_k{k}"), p, target, se, 3.0);
        res.push(vec![Cell::from(k), p.into(), target.into(), se.into(), check.pass.into()]);
        res.checks.push(check);
        if r * target < 10.0 {
            res.note(format!("rare_event_k{k}"), "expected hit count below 10; relative error is large");
        }
    }
    res.conclude();
    Ok(res)
}
