use std::f64::consts::E;

use crate::chain::gw_extinction_prob;
use crate::error::{BarwError, Result};

/// Per-`n` coupling constant `(1 − eλ/((e−1)n))^n = P[Bin(n, eλ/((e−1)n)) = 0]`.
///
/// `None` when `eλ/((e−1)n) ≥ 1`, i.e. for very small `n`.
pub fn kappa_n(lambda: f64, n: usize) -> Option<f64> {
    let c = E * lambda / ((E - 1.0) * n as f64);
    if c < 1.0 {
        Some((n as f64 * (-c).ln_1p()).exp())
    } else {
        None
    }
}

/// Open interval of admissible `α`: `(ln λ / λ, 1 − 1/λ)`.
pub fn alpha_range(lambda: f64) -> (f64, f64) {
    (lambda.ln() / lambda, 1.0 - 1.0 / lambda)
}

/// `γ = exp(−α λ e^{−λε} (1 − λε))`.
pub fn gamma_ratio(lambda: f64, epsilon: f64, alpha: f64) -> f64 {
    let le = lambda * epsilon;
    (-alpha * lambda * (-le).exp() * (1.0 - le)).exp()
}

/// Offspring mean of the dominating subcritical Galton-Watson process for a
/// given ratio bound `β`: `βλ/(1−λε) · (1 + 2λε/(1−λε))`.
pub fn gamma_bar(beta: f64, lambda: f64, epsilon: f64) -> f64 {
    let le = lambda * epsilon;
    beta * lambda / (1.0 - le) * (1.0 + 2.0 * le / (1.0 - le))
}

/// Constants feeding the analytic bounds for one `(λ, n, ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSet {
    pub lambda: f64,
    pub n: usize,
    pub epsilon: f64,
    /// `q(λ)`.
    pub q: f64,
    /// `q(λ e^{−λε})`; `None` when `λ e^{−λε} ≤ 1`.
    pub q1: Option<f64>,
    /// `q(λ (1 + 2λε))`.
    pub q2: f64,
    /// `q(e^{λε})`.
    pub theta: f64,
    pub kappa_n: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    /// `ε < 1/(2λ)`.
    pub eps_below_half_inverse: bool,
    /// `λ e^{−λε} > 1`.
    pub reduced_mean_supercritical: bool,
}

impl BoundSet {
    /// Whether the sub/supermartingale envelope applies.
    pub fn envelope_applicable(&self) -> bool {
        self.eps_below_half_inverse && self.reduced_mean_supercritical && self.q1.is_some()
    }
}

pub fn make_bound_set(lambda: f64, n: usize, epsilon: f64, alpha: Option<f64>) -> Result<BoundSet> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(BarwError::domain(format!(
            "lambda must be > 1, got {lambda}"
        )));
    }
    if n == 0 {
        return Err(BarwError::domain("n must be at least 1"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(BarwError::domain(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let (lo, hi) = alpha_range(lambda);
    let alpha = alpha.unwrap_or(0.5 * (lo + hi));
    if !(alpha > lo && alpha < hi) {
        return Err(BarwError::domain(format!(
            "alpha must lie in ({lo}, {hi}), got {alpha}"
        )));
    }
    let le = lambda * epsilon;
    let reduced = lambda * (-le).exp();
    let q1 = if reduced > 1.0 + 1e-12 {
        Some(gw_extinction_prob(reduced)?)
    } else {
        None
    };
    Ok(BoundSet {
        lambda,
        n,
        epsilon,
        q: gw_extinction_prob(lambda)?,
        q1,
        q2: gw_extinction_prob(lambda * (1.0 + 2.0 * le))?,
        theta: gw_extinction_prob(le.exp())?,
        kappa_n: kappa_n(lambda, n),
        alpha,
        gamma: gamma_ratio(lambda, epsilon, alpha),
        eps_below_half_inverse: epsilon < 1.0 / (2.0 * lambda),
        reduced_mean_supercritical: reduced > 1.0,
    })
}
