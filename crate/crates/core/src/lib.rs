//! Extinction times of a continuous-time binary spiking-neuron network.
//!
//! Each neuron is either active or quiescent. An active neuron carries two
//! exponential clocks: a spike clock of rate 1 and a leak clock of rate
//! `gamma`. A spike silences the spiking neuron and activates all of its
//! postsynaptic neurons; a leak only silences the leaking neuron. The
//! all-quiescent configuration is absorbing, and the time to reach it is the
//! extinction time.
//!
//! The crate is organized as:
//!
//! * [`network`]: the interaction graphs (finite lattice, complete graph,
//!   user-supplied digraphs).
//! * [`engine`]: event-driven simulation, the graphical construction used for
//!   couplings, and replica management.
//! * [`oracle`]: exact computations on the underlying Markov chains (mean
//!   absorption times, survival curves, the `e^{-1}` quantile, the modified
//!   count chain and its invariant measure).
//! * [`stats`]: estimators and goodness-of-fit tests for extinction samples.
//! * [`experiments`]: scripted studies with CSV/JSON output.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod network;
pub mod oracle;
pub mod output;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
