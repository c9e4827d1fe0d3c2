//! Metropolis sampling of the XY steady state and a quadrature oracle for tiny rings.

pub mod brute_force;
pub mod metropolis;

pub use brute_force::{brute_force_expectation, DEFAULT_POINTS, MAX_SITES};
pub use metropolis::{
    estimate_from_stats, estimate_observables, metropolis_sweep, run_chain, ChainOutput, CorrelationProfile,
    SamplerConfig, XyEstimates, XySampler,
};
