//! Analytic bounds on hitting probabilities and numerical checks against
//! exact profiles.

mod checks;
mod constants;
mod dominance;
mod report;

pub use checks::{
    beta_hat, binomial_tail_bound, check_envelope, check_gamma_ratio, check_geometric,
    check_ratio_beta, check_ratio_kappa, envelope_bounds, envelope_bounds_ln, geometric_upper,
};
pub use constants::{alpha_range, gamma_bar, gamma_ratio, kappa_n, make_bound_set, BoundSet};
pub use dominance::{
    binomial_pmf, check_tilted_dominance, conditioned_binomial_pmf, dominance_gap,
    normalize_log_weights, poisson_pmf, stochastic_dominance, DOMINANCE_SLACK,
};
pub use report::{render_reports, Report};
