//! Event-driven simulation of the binary spiking network.

mod config;
pub mod lumped;
mod replicas;
mod simulate;
pub mod timeline;

pub use config::Configuration;
pub use lumped::CompleteGraphSampler;
pub use replicas::{run_replicas, Workers};
pub use simulate::{
    simulate_extinction, simulate_extinction_traced, step, survival_probe, EventKind, EventRecord,
    ExtinctionOutcome, Horizon, ModelParams, Status, Trajectory,
};
pub use timeline::{
    build_timeline, check_coupling, evolve_on_timeline, extinction_on_timeline, CouplingReport,
    GraphicalTimeline,
};
