use std::io::Write;

use rand::Rng;

use super::config::Configuration;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::exponential;

/// Leak rate of an active neuron (the spike rate is 1).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    gamma: f64,
}

impl ModelParams {
    pub fn new(gamma: f64) -> Result<ModelParams> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and non-negative, got {gamma}"
            )));
        }
        Ok(ModelParams { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Probability that the next event of an active neuron is a spike.
    pub fn spike_probability(&self) -> f64 {
        1.0 / (1.0 + self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    // Leak sorts first: ties in a graphical timeline are broken leak < spike.
    Leak,
    Spike,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Leak => "leak",
            EventKind::Spike => "spike",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    /// Internal index of the neuron that acted.
    pub neuron: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Extinct,
    Censored,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Extinct => "extinct",
            Status::Censored => "censored",
        }
    }
}

/// Result of one extinction run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExtinctionOutcome {
    pub status: Status,
    /// Extinction time, or the horizon when censored.
    pub time: f64,
    pub events: u64,
    pub spikes: u64,
}

impl ExtinctionOutcome {
    pub fn is_extinct(&self) -> bool {
        self.status == Status::Extinct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Horizon {
    Unbounded,
    Finite(f64),
}

impl Horizon {
    pub fn limit(self) -> f64 {
        match self {
            Horizon::Unbounded => f64::INFINITY,
            Horizon::Finite(t) => t,
        }
    }

    fn validate(self, params: &ModelParams) -> Result<()> {
        match self {
            Horizon::Unbounded if params.gamma() == 0.0 => Err(Error::InvalidParameter(
                "an unbounded horizon requires gamma > 0 (without leaks extinction is not certain)"
                    .into(),
            )),
            Horizon::Finite(t) if !(t >= 0.0) => Err(Error::InvalidParameter(format!(
                "horizon must be non-negative, got {t}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A running trajectory of the direct (Gillespie) method.
///
/// Each event consumes exactly three uniforms from the stream, in this
/// order: the waiting time, the acting neuron, the event kind.
pub struct Trajectory<'a, R> {
    net: &'a Network,
    params: ModelParams,
    state: Configuration,
    time: f64,
    events: u64,
    spikes: u64,
    rng: R,
}

impl<'a, R: Rng> Trajectory<'a, R> {
    pub fn new(net: &'a Network, params: ModelParams, init: Configuration, rng: R) -> Self {
        assert_eq!(init.width(), net.size(), "configuration width != network size");
        Trajectory {
            net,
            params,
            state: init,
            time: 0.0,
            events: 0,
            spikes: 0,
            rng,
        }
    }

    pub fn state(&self) -> &Configuration {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    /// Draws the next event without applying it. `None` once extinct.
    fn draw(&mut self) -> Option<EventRecord> {
        let k = self.state.count();
        if k == 0 {
            return None;
        }
        let total_rate = k as f64 * (1.0 + self.params.gamma());
        let gap = exponential(&mut self.rng, total_rate);
        let neuron = self.state.nth_active(self.rng.random_range(0..k));
        let kind = if self.rng.random::<f64>() < self.params.spike_probability() {
            EventKind::Spike
        } else {
            EventKind::Leak
        };
        Some(EventRecord {
            time: self.time + gap,
            neuron,
            kind,
        })
    }

    fn apply(&mut self, ev: &EventRecord) {
        match ev.kind {
            EventKind::Spike => {
                self.state.apply_spike(self.net, ev.neuron);
                self.spikes += 1;
            }
            EventKind::Leak => self.state.apply_leak(ev.neuron),
        }
        self.time = ev.time;
        self.events += 1;
    }

    /// Simulates one event and applies it. `None` on the absorbing state.
    pub fn step(&mut self) -> Option<EventRecord> {
        let ev = self.draw()?;
        self.apply(&ev);
        Some(ev)
    }

    /// Runs until extinction or until the next event would fall after `horizon`.
    pub fn run_until(&mut self, horizon: f64, mut on_event: impl FnMut(&EventRecord, &Configuration)) -> ExtinctionOutcome {
        loop {
            match self.draw() {
                None => {
                    return ExtinctionOutcome {
                        status: Status::Extinct,
                        time: self.time,
                        events: self.events,
                        spikes: self.spikes,
                    }
                }
                Some(ev) if ev.time > horizon => {
                    return ExtinctionOutcome {
                        status: Status::Censored,
                        time: horizon,
                        events: self.events,
                        spikes: self.spikes,
                    }
                }
                Some(ev) => {
                    self.apply(&ev);
                    on_event(&ev, &self.state);
                }
            }
        }
    }
}

impl<R: Rng> Iterator for Trajectory<'_, R> {
    type Item = EventRecord;

    fn next(&mut self) -> Option<EventRecord> {
        self.step()
    }
}

/// One event from `cfg`: returns the event (time measured from 0) and the
/// successor configuration.
///
/// # Panics
///
/// If `cfg` is the absorbing state.
pub fn step<R: Rng>(
    net: &Network,
    params: ModelParams,
    cfg: &Configuration,
    rng: &mut R,
) -> (EventRecord, Configuration) {
    assert!(!cfg.is_extinct(), "step called on the absorbing state");
    let mut traj = Trajectory::new(net, params, cfg.clone(), rng);
    let ev = traj.step().expect("non-empty configuration");
    (ev, traj.state)
}

/// Time to reach the all-quiescent state, censored at `horizon`.
pub fn simulate_extinction<R: Rng>(
    net: &Network,
    params: ModelParams,
    init: &Configuration,
    rng: &mut R,
    horizon: Horizon,
) -> Result<ExtinctionOutcome> {
    horizon.validate(&params)?;
    Ok(Trajectory::new(net, params, init.clone(), rng).run_until(horizon.limit(), |_, _| {}))
}

/// Same as [`simulate_extinction`], writing every event as a CSV row
/// `time,neuron,kind,active_count` (neuron by label).
pub fn simulate_extinction_traced<R: Rng, W: Write>(
    net: &Network,
    params: ModelParams,
    init: &Configuration,
    rng: &mut R,
    horizon: Horizon,
    out: &mut W,
) -> Result<ExtinctionOutcome> {
    horizon.validate(&params)?;
    writeln!(out, "time,neuron,kind,active_count")?;
    let mut io_err = None;
    let outcome = Trajectory::new(net, params, init.clone(), rng).run_until(horizon.limit(), |ev, cfg| {
        if io_err.is_none() {
            if let Err(e) = writeln!(
                out,
                "{},{},{},{}",
                crate::output::fmt_f64(ev.time),
                net.label(ev.neuron),
                ev.kind.as_str(),
                cfg.count()
            ) {
                io_err = Some(e);
            }
        }
    });
    match io_err {
        Some(e) => Err(e.into()),
        None => Ok(outcome),
    }
}

/// Whether any neuron is still active at time `t`.
pub fn survival_probe<R: Rng>(
    net: &Network,
    params: ModelParams,
    init: &Configuration,
    t: f64,
    rng: &mut R,
) -> Result<bool> {
    let outcome = simulate_extinction(net, params, init, rng, Horizon::Finite(t))?;
    Ok(outcome.status == Status::Censored && !init.is_extinct())
}
