use super::{Cell, Check, ExperimentResult, ExperimentSpec};
use crate::engine::{run_replicas, Configuration, Horizon, ModelParams, Workers};
use crate::error::Result;
use crate::network::Network;
use crate::output::fmt_f64;
use crate::rng::derive_seed;
use crate::stats::{extinction_times, summarize, variance_std_error, CensoredPolicy};

/// Largest relative spread `max/min - 1` of the renormalized means.
pub const MEAN_SPREAD: f64 = 0.15;

/// Extinction times of the lattice from the all-active state, renormalized
/// by `log(2N + 1)`, along a ladder of `N`.
pub fn lattice_concentration(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    let params = ModelParams::new(spec.gamma)?;
    let horizon = spec.horizon.map_or(Horizon::Unbounded, Horizon::Finite);
    let mut res = ExperimentResult::new(
        spec,
        vec!["n", "size", "mean_ratio", "var_ratio", "var_ratio_se", "cv", "replicas", "censored"],
    );
    let mut vars = Vec::new();
    let mut means = Vec::new();
    let mut cvs = Vec::new();
    for &n in &spec.ns {
        let net = Network::lattice(n);
        let init = Configuration::full(net.size());
        let outcomes = run_replicas(&net, params, &init, spec.replicas, derive_seed(spec.seed, n as u64), horizon, workers)?;
        let censored = outcomes.len() - outcomes.iter().filter(|o| o.is_extinct()).count();
        let times = extinction_times(&outcomes, CensoredPolicy::Drop)?;
        let scale = (net.size() as f64).ln();
        let ratios: Vec<f64> = times.iter().map(|t| t / scale).collect();
        let s = summarize(&ratios)?;
        let var_se = variance_std_error(&ratios)?;
        let cv = summarize(&times)?.coefficient_of_variation();
        res.push(vec![
            Cell::from(n),
            Cell::from(net.size()),
            s.mean.into(),
            s.variance.into(),
            var_se.into(),
            cv.into(),
            Cell::from(spec.replicas),
            Cell::from(censored),
        ]);
        vars.push((s.variance, var_se));
        means.push(s.mean);
        cvs.push(cv);
    }

    let mut inversions = 0;
    let mut significant = 0;
    for w in vars.windows(2) {
        let ((v0, se0), (v1, se1)) = (w[0], w[1]);
        if v1 > v0 {
            inversions += 1;
            if v1 - v0 > 2.0 * (se0 * se0 + se1 * se1).sqrt() {
                significant += 1;
            }
        }
    }
    res.checks.push(Check::new(
        "variance_non_increasing",
        inversions <= 1 && significant == 0,
        format!("{inversions} inversion(s), {significant} beyond 2 SE; allowed: 1 within 2 SE"),
    ));
    let top_cv = *cvs.last().expect("non-empty ladder");
    res.checks.push(Check::new(
        "cv_at_largest_n",
        top_cv < spec.cv_threshold,
        format!("{} < {}", fmt_f64(top_cv), fmt_f64(spec.cv_threshold)),
    ));
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi / lo - 1.0;
    res.checks.push(Check::new(
        "mean_ratio_stable",
        spread <= MEAN_SPREAD,
        format!("max/min - 1 = {} <= {MEAN_SPREAD}", fmt_f64(spread)),
    ));
    if res.floats("censored").unwrap().iter().any(|c| *c > 0.0) {
        res.note("censoring", "censored replicas are excluded from all moments");
    }
    res.conclude();
    Ok(res)
}
