//! Stochastic ordering of discrete distributions on `{0, 1, 2, …}`.

use statrs::function::gamma::ln_gamma;

use crate::chain::{binomial_logpmf, TransitionTable};
use crate::error::{BarwError, Result};
use crate::logvalue::log_sum_exp;
use crate::solver::TiltedKernel;

use super::report::Report;

/// Slack applied to each CDF comparison.
pub const DOMINANCE_SLACK: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;

fn validate(pmf: &[f64], which: &str) -> Result<()> {
    if let Some(k) = pmf.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(BarwError::domain(format!(
            "{which}: entry {k} is not a nonnegative finite number"
        )));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(BarwError::domain(format!(
            "{which}: masses sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// `min_k (F_a(k) − F_b(k))` over the common support, after padding.
///
/// Nonnegative exactly when `a ≤_st b`.
pub fn dominance_gap(a: &[f64], b: &[f64]) -> Result<f64> {
    validate(a, "first pmf")?;
    validate(b, "second pmf")?;
    let len = a.len().max(b.len());
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut gap = f64::INFINITY;
    for k in 0..len {
        fa += a.get(k).copied().unwrap_or(0.0);
        fb += b.get(k).copied().unwrap_or(0.0);
        gap = gap.min(fa - fb);
    }
    Ok(gap)
}

/// True iff `a ≤_st b`: the CDF of `a` is pointwise at least that of `b`,
/// up to [`DOMINANCE_SLACK`] per comparison.
pub fn stochastic_dominance(a: &[f64], b: &[f64]) -> Result<bool> {
    Ok(dominance_gap(a, b)? >= -DOMINANCE_SLACK)
}

/// Normalizes a vector of log-weights into a pmf.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_w);
    log_w.iter().map(|l| (l - z).exp()).collect()
}

/// Pmf of `Bin(n, p)` on `{0, …, n}`.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    (0..=n).map(|y| binomial_logpmf(n, p, y).exp()).collect()
}

/// Pmf of `Poi(mean)` truncated once the remaining tail is below `1e-16`,
/// with the tail mass folded into the last entry.
pub fn poisson_pmf(mean: f64) -> Vec<f64> {
    if !(mean > 0.0) {
        return vec![1.0];
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let l = k as f64 * mean.ln() - mean - ln_gamma(k as f64 + 1.0);
        let p = l.exp();
        out.push(p);
        // Past 2·mean successive terms at least halve, so the tail is below p.
        if (k + 1) as f64 >= 2.0 * mean && p < 1e-16 {
            break;
        }
        k += 1;
    }
    let total: f64 = out.iter().sum();
    if let Some(last) = out.last_mut() {
        *last += (1.0 - total).max(0.0);
    }
    out
}

/// `Bin(n, p)` conditioned on `{X ≤ m}`.
pub fn conditioned_binomial_pmf(n: usize, p: f64, m: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..=m.min(n)).map(|y| binomial_logpmf(n, p, y)).collect();
    normalize_log_weights(&logs)
}

/// Checks each tilted row against the upper measure `μ_x(y) ∝ β^y p(x,y)`
/// (all `y ≤ n`) and the lower measure `ν_x(y) ∝ κ^y p(x,y) 1{y < u}`:
/// `ν_x ≤_st p_φ(x,·) ≤_st μ_x`.
pub fn check_tilted_dominance(kernel: &TiltedKernel, beta: f64, kappa: f64) -> Report {
    let params = *kernel.source().params();
    let u = kernel.u();
    let n = params.n();
    let mut report = Report::new("tilted-dominance")
        .param("lambda", params.lambda())
        .param("n", n)
        .param("u", u)
        .param("beta", beta)
        .param("kappa", kappa);
    if !(beta > 0.0 && kappa > 0.0) {
        return report.inapplicable("beta and kappa must be positive");
    }
    let table = TransitionTable::new(params);
    let (lb, lk) = (beta.ln(), kappa.ln());
    let mut min_upper_gap = f64::INFINITY;
    let mut min_lower_gap = f64::INFINITY;
    for x in 1..u {
        let logp = table.row(x);
        let mu = normalize_log_weights(
            &logp
                .iter()
                .enumerate()
                .map(|(y, l)| l + y as f64 * lb)
                .collect::<Vec<_>>(),
        );
        let nu = normalize_log_weights(
            &logp[..u]
                .iter()
                .enumerate()
                .map(|(y, l)| l + y as f64 * lk)
                .collect::<Vec<_>>(),
        );
        let row = kernel.row(x);
        match (dominance_gap(row, &mu), dominance_gap(&nu, row)) {
            (Ok(up), Ok(down)) => {
                min_upper_gap = min_upper_gap.min(up);
                min_lower_gap = min_lower_gap.min(down);
                if up < -DOMINANCE_SLACK {
                    report.violation(format!(
                        "x={x}: tilted row not dominated by mu (gap {up:e})"
                    ));
                }
                if down < -DOMINANCE_SLACK {
                    report.violation(format!(
                        "x={x}: nu not dominated by tilted row (gap {down:e})"
                    ));
                }
            }
            (Err(e), _) | (_, Err(e)) => report.violation(format!("x={x}: {e}")),
        }
    }
    report.extreme("min_cdf_gap_upper", min_upper_gap);
    report.extreme("min_cdf_gap_lower", min_lower_gap);
    report
}
