//! Exact hitting probabilities, the conditioned kernel, and expected times.

mod hitting;
mod kernel;
pub(crate) mod linear;
mod times;

pub use hitting::{hitting_profile, hitting_profile_with, HittingProfile, SolveMethod};
pub use kernel::{tilted_kernel, TiltedKernel};
pub use times::{
    conditional_expected_extinction, conditional_occupation_time,
    unconditional_expected_extinction, TimeProfile,
};

/// Maximum `|ln Σ_y p(x,y) φ(y) − ln φ(x)|` accepted for a hitting profile.
pub const HARMONICITY_TOL: f64 = 1e-8;
/// Maximum deviation of a tilted row from unit mass before renormalizing.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Smallest `φ` the native dense path must be able to represent.
pub const NATIVE_FLOOR: f64 = 1e-280;
pub const VALUE_ITERATION_TOL: f64 = 1e-13;
pub const VALUE_ITERATION_MAX_SWEEPS: usize = 1_000_000;
/// Largest `n` for which unconditional expected times are solved.
pub const UNCONDITIONAL_MAX_N: usize = 400;
