//! Monte Carlo engines for the count chain and the particle system.
//!
//! Every trial draws from its own stream derived from `(seed, trial)`, and
//! per-trial results are merged in trial order, so outputs are identical
//! for any number of worker threads.

mod estimate;
mod graph;
mod meanfield;
mod particle;
mod rng;

pub use estimate::{
    estimate_conditioned_time, estimate_hitting_prob, meanfield_step_histogram, meanfield_step_pmf,
    particle_step_histogram, run_trials, total_variation, EstimateWithCI, Workers, STEP_CAP,
};
pub use graph::GraphSpec;
pub use meanfield::{
    run_to_absorption, sample_conditioned_path, step_meanfield, ConditionedSampler, Trajectory,
};
pub use particle::{step_particle, Offspring, ParticleState};
pub use rng::{trial_stream, TrialRng};
