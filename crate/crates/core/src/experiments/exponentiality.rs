use super::{within, Cell, Check, ExperimentResult, ExperimentSpec};
use crate::engine::{simulate_extinction, CompleteGraphSampler, Configuration, Horizon, ModelParams, Workers};
use crate::error::Result;
use crate::network::Network;
use crate::oracle::{complete_graph_survival, exponentiality_gap};
use crate::output::fmt_f64;
use crate::rng::derive_seed;
use crate::stats::{dkw_band, ks_to_unit_exponential, summarize, survival_sup_distance_sorted, Normalization};

/// Neuron-level simulation is used while a run takes at most this many
/// events on average; beyond it the count-chain sampler takes over.
pub const ENGINE_EVENT_LIMIT: f64 = 2000.0;

/// Allowance on the KS critical value for finite-`N` bias.
pub const KS_INFLATION: f64 = 3.0;

/// Complete-graph extinction times against `Exp(1)`, by simulation and exactly.
pub fn complete_exponentiality(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    let g = spec.gamma;
    let params = ModelParams::new(g)?;
    let mut res = ExperimentResult::new(
        spec,
        vec![
            "n",
            "sampler",
            "replicas",
            "mc_mean",
            "mc_se",
            "ks_stat",
            "ks_critical",
            "oracle_mean",
            "oracle_beta",
            "ratio",
            "ratio_minus_one",
            "sup_distance",
            "oracle_method",
            "survival_distance",
            "dkw_half_width",
        ],
    );
    let dkw = dkw_band(spec.replicas, 0.01)?;
    let mut gaps = Vec::new();
    let mut kss = Vec::new();
    for &n in &spec.ns {
        let gap = exponentiality_gap(n, g)?;
        let use_engine = gap.mean * n as f64 * (1.0 + g) <= ENGINE_EVENT_LIMIT;
        let seed = derive_seed(spec.seed, n as u64);
        let samples: Vec<f64> = if use_engine {
            let net = Network::complete(n)?;
            let init = Configuration::full(n);
            workers.map_replicas(spec.replicas, seed, |_, rng| {
                simulate_extinction(&net, params, &init, rng, Horizon::Unbounded).expect("gamma > 0").time
            })?
        } else {
            let sampler = CompleteGraphSampler::new(n, g)?;
            workers.map_replicas(spec.replicas, seed, |_, rng| sampler.sample(rng))?
        };
        let s = summarize(&samples)?;
        let ks = ks_to_unit_exponential(&samples, Normalization::SampleMean)?;

        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let (curve, _) = complete_graph_survival(n, g, &sorted, 1e-10)?;
        let (surv, oracle_err) = (curve.probs, curve.tolerance);
        let surv_dist = survival_sup_distance_sorted(&sorted, &surv)?;

        res.push(vec![
            Cell::from(n),
            Cell::from(if use_engine { "engine" } else { "count_chain" }),
            Cell::from(spec.replicas),
            s.mean.into(),
            s.std_error.into(),
            ks.statistic.into(),
            ks.critical_value.into(),
            gap.mean.into(),
            gap.beta.into(),
            gap.ratio().into(),
            gap.ratio_minus_one.into(),
            gap.sup_distance.into(),
            Cell::from(gap.method.as_str()),
            surv_dist.into(),
            dkw.into(),
        ]);
        res.checks.push(within(&format!("mc_mean_n{n}"), s.mean, gap.mean, s.std_error, 4.0));
        res.checks.push(Check::new(
            &format!("survival_in_dkw_band_n{n}"),
            surv_dist <= dkw + oracle_err,
            format!("{} <= {} + {}", fmt_f64(surv_dist), fmt_f64(dkw), fmt_f64(oracle_err)),
        ));
        gaps.push(gap);
        kss.push(ks);
    }

    if gaps.len() > 1 {
        let d: Vec<f64> = gaps.iter().map(|x| x.sup_distance).collect();
        res.checks.push(Check::new(
            "sup_distance_decreasing",
            d.windows(2).all(|w| w[1] < w[0]),
            d.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" > "),
        ));
        let (first, last) = (gaps[0].ratio_minus_one.abs(), gaps[gaps.len() - 1].ratio_minus_one.abs());
        res.checks.push(Check::new(
            "ratio_approaches_one",
            last < first,
            format!("|E/beta - 1|: {} < {}", fmt_f64(last), fmt_f64(first)),
        ));
        let (k0, k1) = (&kss[0], &kss[kss.len() - 1]);
        res.checks.push(Check::new(
            "ks_shrinks",
            k1.statistic < k0.statistic,
            format!("{} < {}", fmt_f64(k1.statistic), fmt_f64(k0.statistic)),
        ));
    }
    let top = &kss[kss.len() - 1];
    res.checks.push(Check::new(
        "ks_at_largest_n",
        top.statistic < KS_INFLATION * top.critical_value,
        format!("{} < {KS_INFLATION} * {}", fmt_f64(top.statistic), fmt_f64(top.critical_value)),
    ));
    res.note("ks_normalization", "sample mean");
    res.note("dkw_level", 0.01);
    res.conclude();
    Ok(res)
}
