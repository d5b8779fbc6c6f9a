//! Distributional agreement between the different ways of producing the same
//! extinction law.

use proptest::prelude::*;
use spiking_extinction::engine::{
    build_timeline, simulate_extinction, CompleteGraphSampler, Configuration, Horizon, ModelParams, Workers,
};
use spiking_extinction::network::Network;
use spiking_extinction::oracle::{
    beta_quantile, count_chain_generator, expected_absorption, full_state_generator, mean_absorption_times,
    survival_function,
};
use spiking_extinction::stats::two_sample_ks;

const SAMPLES: usize = 20_000;

fn engine_times(net: &Network, gamma: f64, seed: u64) -> Vec<f64> {
    let params = ModelParams::new(gamma).unwrap();
    let init = Configuration::full(net.size());
    Workers::default()
        .map_replicas(SAMPLES, seed, |_, rng| {
            simulate_extinction(net, params, &init, rng, Horizon::Unbounded).unwrap().time
        })
        .unwrap()
}

#[test]
fn lumped_sampler_matches_engine() {
    for (n, gamma) in [(3, 1.0), (8, 1.0), (8, 2.0)] {
        let direct = engine_times(&Network::complete(n).unwrap(), gamma, 21);
        let s = CompleteGraphSampler::new(n, gamma).unwrap();
        let lumped = Workers::default().map_replicas(SAMPLES, 22, |_, rng| s.sample(rng)).unwrap();
        let ks = two_sample_ks(&direct, &lumped).unwrap();
        assert!(!ks.reject_at_1pct, "N={n} gamma={gamma}: D={} > {}", ks.statistic, ks.critical_value);
    }
}

#[test]
fn timeline_matches_direct_method() {
    let net = Network::lattice(2);
    let params = ModelParams::new(1.0).unwrap();
    let init = Configuration::full(net.size());
    let direct = engine_times(&net, 1.0, 31);
    let coupled = Workers::default()
        .map_replicas(SAMPLES, 32, |_, rng| {
            let tl = build_timeline(&net, params, 200.0, rng).unwrap();
            let out = tl.extinction(&net, &init);
            assert!(out.is_extinct());
            out.time
        })
        .unwrap();
    let ks = two_sample_ks(&direct, &coupled).unwrap();
    assert!(!ks.reject_at_1pct, "D={} > {}", ks.statistic, ks.critical_value);
}

#[test]
fn mean_is_integral_of_survival() {
    // E(tau) = int_0^inf P(tau > t) dt, by Simpson on a fine grid.
    let c = count_chain_generator(4, 1.0).unwrap();
    let mean = expected_absorption(c.generator(), &c.full_start()).unwrap();
    let steps = 20_000;
    let t_max = 60.0 * mean;
    let h = t_max / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let curve = survival_function(c.generator(), &c.full_start(), &times, 1e-13).unwrap();
    let p = &curve.probs;
    let simpson = h / 3.0
        * (p[0] + p[steps] + (1..steps).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * p[i]).sum::<f64>());
    assert!((simpson - mean).abs() < 1e-8 * mean, "{simpson} vs {mean}");
    assert!(p[steps] < 1e-20);
}

#[test]
fn beta_sits_on_the_survival_curve() {
    let net = Network::lattice(2);
    let gen = full_state_generator(&net, ModelParams::new(0.7).unwrap()).unwrap();
    let start = gen.point_mass((1 << 5) - 1).unwrap();
    let beta = beta_quantile(&gen, &start).unwrap();
    let curve = survival_function(&gen, &start, &[beta], 1e-14).unwrap();
    assert!((curve.probs[0] - (-1.0f64).exp()).abs() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// On K_N the mean absorption time from a configuration depends only on
    /// how many neurons are active, and equals the count-chain value.
    #[test]
    fn cardinality_is_sufficient(n in 2usize..=6, gamma in 0.1f64..3.0) {
        let net = Network::complete(n).unwrap();
        let full = full_state_generator(&net, ModelParams::new(gamma).unwrap()).unwrap();
        let m_full = mean_absorption_times(&full).unwrap();
        let count = count_chain_generator(n, gamma).unwrap();
        let m_count = mean_absorption_times(count.generator()).unwrap();
        for (i, &mask) in full.states().iter().enumerate() {
            let k = mask.count_ones() as u64;
            let j = count.generator().state_index(k).unwrap();
            prop_assert!((m_full[i] - m_count[j]).abs() <= 1e-9 * m_count[j],
                "mask {mask:b}: {} vs {}", m_full[i], m_count[j]);
        }
    }

    /// Adding active neurons never shortens the expected extinction time.
    #[test]
    fn mean_is_monotone_in_the_initial_set(gamma in 0.1f64..3.0) {
        let net = Network::lattice(2);
        let gen = full_state_generator(&net, ModelParams::new(gamma).unwrap()).unwrap();
        let m = mean_absorption_times(&gen).unwrap();
        for (i, &a) in gen.states().iter().enumerate() {
            for (j, &b) in gen.states().iter().enumerate() {
                if a & b == a {
                    prop_assert!(m[i] <= m[j] * (1.0 + 1e-12), "{a:b} vs {b:b}");
                }
            }
        }
    }
}
