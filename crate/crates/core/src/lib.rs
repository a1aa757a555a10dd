//! Exact analysis and Monte Carlo simulation of branching-annihilating random
//! walk (BARW) on the complete graph.
//!
//! * [`chain`]: the mean-field count chain and its binomial kernel.
//! * [`solver`]: hitting probabilities, the conditioned (tilted) kernel, and
//!   expected extinction and occupation times.
//! * [`sim`]: count-chain and particle-level samplers with reproducible
//!   per-trial random streams.
//! * [`bounds`]: analytic envelopes and ratio / dominance checks against the
//!   exact quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod error;
pub mod logvalue;
pub mod sim;
pub mod solver;

pub use bounds::{BoundSet, Report};
pub use chain::{
    branch_prob, equilibrium, gw_extinction_prob, threshold_u, transition_logpmf, LevelMode,
    LevelSpec, ModelParams, TransitionTable,
};
pub use error::{BarwError, Result};
pub use logvalue::LogValue;
pub use sim::{EstimateWithCI, GraphSpec, ParticleState, Trajectory, Workers};
pub use solver::{HittingProfile, SolveMethod, TiltedKernel, TimeProfile};
