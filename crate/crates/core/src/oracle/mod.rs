//! Exact reference results at toy scale and their comparison with the engine.

pub mod absorption;
pub mod chain;
pub mod compare;
pub mod equilibrium;

pub use absorption::{absorption_distribution, AbsorptionDistribution};
pub use chain::{sample_equilibrium_chain, ChainEstimates, ChainPlan, Estimate};
pub use compare::{
    compare_absorption, compare_moments, total_variation, CheckEntry, ComparisonReport,
};
pub use equilibrium::{enumerate_potts_equilibrium, ExactEquilibrium, ProbeExpectation};
