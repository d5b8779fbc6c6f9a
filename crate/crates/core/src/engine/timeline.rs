//! Graphical construction.
//!
//! Every neuron gets two independent Poisson mark processes on
//! `[0, horizon]`: spike marks at rate 1 and leak marks at rate `gamma`.
//! Reading the marks in time order from any initial configuration gives a
//! trajectory with the same law as the direct simulation, and running several
//! initial configurations on the same marks couples them: a spike mark on `i`
//! fires only if `i` is active just before it, a leak mark always silences
//! `i`. Under this coupling the process is additive (the run from `A ∪ B` is
//! the union of the runs from `A` and from `B`) and hence monotone.

use rand::Rng;

use super::config::Configuration;
use super::simulate::{EventKind, ExtinctionOutcome, ModelParams, Status};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::exponential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub time: f64,
    pub neuron: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
pub struct GraphicalTimeline {
    horizon: f64,
    spikes: Vec<Vec<f64>>,
    leaks: Vec<Vec<f64>>,
    merged: Vec<Mark>,
}

fn poisson_marks<R: Rng>(rng: &mut R, rate: f64, horizon: f64) -> Vec<f64> {
    let mut marks = Vec::new();
    if rate <= 0.0 {
        return marks;
    }
    let mut t = 0.0;
    loop {
        t += exponential(rng, rate);
        if t > horizon {
            return marks;
        }
        // A zero-length gap (possible in floating point) would duplicate a timestamp.
        if marks.last() != Some(&t) {
            marks.push(t);
        }
    }
}

impl GraphicalTimeline {
    /// Samples the marks of every neuron. Streams are consumed neuron by
    /// neuron, spike marks before leak marks.
    pub fn build<R: Rng>(net: &Network, params: ModelParams, horizon: f64, rng: &mut R) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "timeline horizon must be finite and positive, got {horizon}"
            )));
        }
        let mut spikes = Vec::with_capacity(net.size());
        let mut leaks = Vec::with_capacity(net.size());
        for _ in 0..net.size() {
            spikes.push(poisson_marks(rng, 1.0, horizon));
            leaks.push(poisson_marks(rng, params.gamma(), horizon));
        }
        Ok(GraphicalTimeline::from_marks(horizon, spikes, leaks))
    }

    /// Assembles a timeline from explicit per-neuron mark lists (each sorted).
    pub fn from_marks(horizon: f64, spikes: Vec<Vec<f64>>, leaks: Vec<Vec<f64>>) -> Self {
        let mut merged = Vec::with_capacity(
            spikes.iter().map(Vec::len).sum::<usize>() + leaks.iter().map(Vec::len).sum::<usize>(),
        );
        for (neuron, ts) in spikes.iter().enumerate() {
            merged.extend(ts.iter().map(|&time| Mark { time, neuron, kind: EventKind::Spike }));
        }
        for (neuron, ts) in leaks.iter().enumerate() {
            merged.extend(ts.iter().map(|&time| Mark { time, neuron, kind: EventKind::Leak }));
        }
        // Ties: (time, neuron, leak < spike).
        merged.sort_by(|a, b| {
            a.time
                .total_cmp(&b.time)
                .then(a.neuron.cmp(&b.neuron))
                .then(a.kind.cmp(&b.kind))
        });
        GraphicalTimeline { horizon, spikes, leaks, merged }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn spike_marks(&self, neuron: usize) -> &[f64] {
        &self.spikes[neuron]
    }

    pub fn leak_marks(&self, neuron: usize) -> &[f64] {
        &self.leaks[neuron]
    }

    /// All marks in processing order.
    pub fn marks(&self) -> &[Mark] {
        &self.merged
    }

    fn check_width(&self, net: &Network, init: &Configuration) {
        assert_eq!(self.spikes.len(), net.size(), "timeline built for another network");
        assert_eq!(init.width(), net.size(), "configuration width != network size");
    }

    /// Configuration at each of the (non-decreasing) query times.
    pub fn evolve_at(&self, net: &Network, init: &Configuration, times: &[f64]) -> Result<Vec<Configuration>> {
        self.check_width(net, init);
        if let Some(&t) = times.iter().find(|&&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::InvalidParameter(format!(
                "query time {t} outside [0, {}]",
                self.horizon
            )));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("query times must be non-decreasing".into()));
        }
        let mut state = init.clone();
        let mut out = Vec::with_capacity(times.len());
        let mut marks = self.merged.iter().peekable();
        for &t in times {
            while let Some(m) = marks.next_if(|m| m.time <= t) {
                apply_mark(net, &mut state, m);
            }
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Configuration at time `t <= horizon`.
    pub fn evolve(&self, net: &Network, init: &Configuration, t: f64) -> Result<Configuration> {
        Ok(self.evolve_at(net, init, &[t])?.pop().expect("one query"))
    }

    /// First time the configuration empties; censored at the horizon.
    pub fn extinction(&self, net: &Network, init: &Configuration) -> ExtinctionOutcome {
        self.check_width(net, init);
        let mut state = init.clone();
        let (mut events, mut spikes) = (0u64, 0u64);
        if state.is_extinct() {
            return ExtinctionOutcome { status: Status::Extinct, time: 0.0, events, spikes };
        }
        for m in &self.merged {
            if !state.is_active(m.neuron) {
                continue;
            }
            apply_mark(net, &mut state, m);
            events += 1;
            if m.kind == EventKind::Spike {
                spikes += 1;
            }
            if state.is_extinct() {
                return ExtinctionOutcome { status: Status::Extinct, time: m.time, events, spikes };
            }
        }
        ExtinctionOutcome { status: Status::Censored, time: self.horizon, events, spikes }
    }
}

fn apply_mark(net: &Network, state: &mut Configuration, m: &Mark) {
    match m.kind {
        EventKind::Spike => {
            if state.is_active(m.neuron) {
                state.apply_spike(net, m.neuron);
            }
        }
        EventKind::Leak => state.apply_leak(m.neuron),
    }
}

pub fn build_timeline<R: Rng>(net: &Network, params: ModelParams, horizon: f64, rng: &mut R) -> Result<GraphicalTimeline> {
    GraphicalTimeline::build(net, params, horizon, rng)
}

pub fn evolve_on_timeline(timeline: &GraphicalTimeline, net: &Network, init: &Configuration, t: f64) -> Result<Configuration> {
    timeline.evolve(net, init, t)
}

pub fn extinction_on_timeline(timeline: &GraphicalTimeline, net: &Network, init: &Configuration) -> ExtinctionOutcome {
    timeline.extinction(net, init)
}

/// Tally of the exact coupling identities checked on shared timelines.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct CouplingReport {
    pub timelines: usize,
    pub additivity_checks: usize,
    pub additivity_violations: usize,
    pub monotonicity_checks: usize,
    pub monotonicity_violations: usize,
    pub extinction_checks: usize,
    pub extinction_violations: usize,
}

impl CouplingReport {
    pub fn violations(&self) -> usize {
        self.additivity_violations + self.monotonicity_violations + self.extinction_violations
    }

    pub fn merge(&mut self, other: &CouplingReport) {
        self.timelines += other.timelines;
        self.additivity_checks += other.additivity_checks;
        self.additivity_violations += other.additivity_violations;
        self.monotonicity_checks += other.monotonicity_checks;
        self.monotonicity_violations += other.monotonicity_violations;
        self.extinction_checks += other.extinction_checks;
        self.extinction_violations += other.extinction_violations;
    }
}

/// Checks additivity and monotonicity on one timeline.
///
/// For a random set `B` and random `A ⊆ B`, compares at every query time
/// the run from `B` with the union of single-neuron runs over `B`, and the
/// run from `A` with the run from `B`. Extinction times are checked the
/// same way: the full-set extinction time is the maximum over singletons,
/// and extinction from `A` is no later than from `B`.
pub fn check_coupling<R: Rng>(
    timeline: &GraphicalTimeline,
    net: &Network,
    times: &[f64],
    rng: &mut R,
) -> Result<CouplingReport> {
    let n = net.size();
    let mut report = CouplingReport { timelines: 1, ..Default::default() };

    let big = Configuration::from_indices(n, (0..n).filter(|_| rng.random_bool(0.6)));
    let small = Configuration::from_indices(n, big.active_indices().filter(|_| rng.random_bool(0.5)));

    let from_big = timeline.evolve_at(net, &big, times)?;
    let from_small = timeline.evolve_at(net, &small, times)?;
    let singles = big
        .active_indices()
        .map(|i| timeline.evolve_at(net, &Configuration::from_indices(n, [i]), times))
        .collect::<Result<Vec<_>>>()?;
    for (q, at_t) in from_big.iter().enumerate() {
        let union = singles
            .iter()
            .fold(Configuration::empty(n), |acc, run| acc.union(&run[q]));
        report.additivity_checks += 1;
        if &union != at_t {
            report.additivity_violations += 1;
        }
        report.monotonicity_checks += 1;
        if !from_small[q].is_subset(at_t) {
            report.monotonicity_violations += 1;
        }
    }

    let full = Configuration::full(n);
    let full_ext = timeline.extinction(net, &full);
    let single_ext: Vec<ExtinctionOutcome> = (0..n)
        .map(|i| timeline.extinction(net, &Configuration::from_indices(n, [i])))
        .collect();
    report.extinction_checks += 2;
    let all_extinct = single_ext.iter().all(|o| o.is_extinct());
    let max_single = single_ext.iter().map(|o| o.time).fold(0.0, f64::max);
    if all_extinct != full_ext.is_extinct() || (all_extinct && max_single != full_ext.time) {
        report.extinction_violations += 1;
    }
    let ext_small = timeline.extinction(net, &small);
    let ext_big = timeline.extinction(net, &big);
    let small_no_later = match (ext_small.is_extinct(), ext_big.is_extinct()) {
        (true, true) => ext_small.time <= ext_big.time,
        (_, false) => true,
        (false, true) => false,
    };
    if !small_no_later {
        report.extinction_violations += 1;
    }
    Ok(report)
}
