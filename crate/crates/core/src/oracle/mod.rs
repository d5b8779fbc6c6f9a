//! Exact computations on the finite chains.

pub mod absorption;
pub mod bounds;
pub mod generator;
pub mod metastable;
pub mod modified;
pub mod survival;

pub use absorption::{expected_absorption, mean_absorption_times};
pub use bounds::{branching_bound, ek_probability, BranchingBound};
pub use generator::{count_chain_generator, full_state_generator, generator_for, CountChain, SubGenerator};
pub use metastable::{
    complete_graph_survival, exponentiality_gap, metastable_analysis, ExponentialityGap, GapMethod, MetastableAnalysis,
};
pub use modified::{invariant_measure, modified_chain, top_mass_lower_bound, InvariantMeasure, ModifiedChain};
pub use survival::{beta_quantile, survival_function, SurvivalCurve};
