use crate::chain::{binomial_logpmf, equilibrium, ModelParams, TransitionTable};
use crate::error::{BarwError, Result};
use crate::logvalue::{log_sum_exp_iter, LogValue};
use crate::solver::HittingProfile;

use super::constants::{alpha_range, gamma_ratio, BoundSet};
use super::report::Report;

/// Relative slack for log-domain comparisons against exact profiles.
const LOG_SLACK: f64 = 1e-12;

fn slack(v: f64) -> f64 {
    LOG_SLACK * v.abs().max(1.0)
}

/// `ln((q^x − q^top)/(1 − q^top))` for `x ≤ top`, without cancellation.
fn ln_stopped_ratio(q: f64, x: f64, top: f64) -> f64 {
    let lq = q.ln();
    // q^x − q^top = q^x (1 − q^{top−x})
    x * lq + (-((top - x) * lq).exp_m1()).ln() - (-(top * lq).exp_m1()).ln()
}

/// Natural logs of the optional-stopping envelope around
/// `P_x[T_0 < T_{εn}^+]`: `((q₂^x − q₂^{εn})/(1 − q₂^{εn}), (q₁^x − q₁^n)/(1 − q₁^n))`.
pub fn envelope_bounds_ln(bounds: &BoundSet, x: usize) -> Result<(f64, f64)> {
    let q1 = match bounds.q1 {
        Some(q1) if bounds.envelope_applicable() => q1,
        _ => {
            return Err(BarwError::Precondition(format!(
                "envelope needs ε < 1/(2λ) and λe^(−λε) > 1 (λ={}, ε={})",
                bounds.lambda, bounds.epsilon
            )))
        }
    };
    let top = bounds.epsilon * bounds.n as f64;
    if !((x as f64) < top) {
        return Err(BarwError::domain(format!(
            "envelope needs x < εn = {top}, got {x}"
        )));
    }
    let lower = ln_stopped_ratio(bounds.q2, x as f64, top);
    let upper = ln_stopped_ratio(q1, x as f64, bounds.n as f64);
    Ok((lower, upper))
}

/// The envelope as plain probabilities.
pub fn envelope_bounds(bounds: &BoundSet, x: usize) -> Result<(f64, f64)> {
    let (lo, hi) = envelope_bounds_ln(bounds, x)?;
    Ok((lo.exp(), hi.exp()))
}

/// `θ^x` as a log value.
pub fn geometric_upper(bounds: &BoundSet, x: usize) -> LogValue {
    LogValue::from_ln(x as f64 * bounds.theta.ln())
}

fn same_model(profile: &HittingProfile, bounds: &BoundSet) -> bool {
    profile.params().lambda() == bounds.lambda && profile.params().n() == bounds.n
}

fn base_report(name: &str, profile: &HittingProfile) -> Report {
    Report::new(name)
        .param("lambda", profile.params().lambda())
        .param("n", profile.params().n())
        .param("u", profile.u())
}

/// Sandwich `lower(x) ≤ φ(x) ≤ upper(x)` for a profile with `u = ⌈εn⌉`.
pub fn check_envelope(profile: &HittingProfile, bounds: &BoundSet) -> Report {
    let mut report = base_report("envelope", profile).param("epsilon", bounds.epsilon);
    if !same_model(profile, bounds) {
        report.violation("profile and bound set describe different models");
        return report;
    }
    if !bounds.envelope_applicable() {
        return report.inapplicable("ε ≥ 1/(2λ) or λe^(−λε) ≤ 1");
    }
    let top = bounds.epsilon * bounds.n as f64;
    if profile.u() as f64 != top.ceil() {
        return report.inapplicable(format!("profile threshold {} is not ⌈εn⌉", profile.u()));
    }
    let mut min_lower_margin = f64::INFINITY;
    let mut min_upper_margin = f64::INFINITY;
    for x in 0..profile.u() {
        if (x as f64) >= top {
            break;
        }
        let (lo, hi) = match envelope_bounds_ln(bounds, x) {
            Ok(v) => v,
            Err(e) => {
                report.violation(format!("x={x}: {e}"));
                continue;
            }
        };
        let lp = profile.ln_phi(x);
        // At x = 0 both sides are exactly 1.
        if x > 0 {
            min_lower_margin = min_lower_margin.min(lp - lo);
            min_upper_margin = min_upper_margin.min(hi - lp);
        }
        if lp < lo - slack(lo) {
            report.violation(format!("x={x}: ln phi {lp} below lower envelope {lo}"));
        }
        if lp > hi + slack(hi) {
            report.violation(format!("x={x}: ln phi {lp} above upper envelope {hi}"));
        }
    }
    report.extreme("min_ln_margin_lower", min_lower_margin);
    report.extreme("min_ln_margin_upper", min_upper_margin);
    report
}

/// `ln φ(x) ≤ x ln θ` for every `x < u`, valid when every transient state is
/// at most `eq − εn`.
pub fn check_geometric(profile: &HittingProfile, bounds: &BoundSet) -> Report {
    let mut report = base_report("geometric-upper", profile)
        .param("epsilon", bounds.epsilon)
        .param("theta", bounds.theta);
    if !same_model(profile, bounds) {
        report.violation("profile and bound set describe different models");
        return report;
    }
    let top = equilibrium(profile.params()) - bounds.epsilon * bounds.n as f64;
    if (profile.u() - 1) as f64 > top {
        return report.inapplicable(format!(
            "transient states reach {} > eq − εn = {top}",
            profile.u() - 1
        ));
    }
    let mut min_margin = f64::INFINITY;
    for x in 0..profile.u() {
        let bound = geometric_upper(bounds, x).ln();
        let lp = profile.ln_phi(x);
        if x > 0 {
            min_margin = min_margin.min(bound - lp);
        }
        if lp > bound + slack(bound) {
            report.violation(format!("x={x}: ln phi {lp} exceeds x ln theta {bound}"));
        }
    }
    report.extreme("min_ln_margin", min_margin);
    report
}

/// `φ(x+1) ≥ κ_n φ(x)` for all adjacent pairs below `u`.
pub fn check_ratio_kappa(profile: &HittingProfile, bounds: &BoundSet) -> Report {
    let mut report = base_report("kappa-ratio", profile);
    if !same_model(profile, bounds) {
        report.violation("profile and bound set describe different models");
        return report;
    }
    let kappa = match bounds.kappa_n {
        Some(k) => k,
        None => return report.inapplicable("eλ/((e−1)n) ≥ 1: κ_n undefined"),
    };
    report = report.param("kappa_n", kappa);
    if profile.u() < 2 {
        return report.inapplicable("no adjacent pairs below u");
    }
    let lk = kappa.ln();
    let mut min_ln_ratio = f64::INFINITY;
    for x in 0..profile.u() - 1 {
        let r = profile.ln_phi(x + 1) - profile.ln_phi(x);
        min_ln_ratio = min_ln_ratio.min(r);
        if r < lk {
            report.violation(format!("x={x}: ratio {} < kappa_n {kappa}", r.exp()));
        }
    }
    report.extreme("min_ratio", min_ln_ratio.exp());
    report
}

/// `β̂ = max_x φ(x+1)/φ(x)`, or `None` when `u < 2`.
pub fn beta_hat(profile: &HittingProfile) -> Option<f64> {
    (0..profile.u().saturating_sub(1))
        .map(|x| profile.ln_phi(x + 1) - profile.ln_phi(x))
        .reduce(f64::max)
        .map(f64::exp)
}

/// Reports `β̂` and whether `β̂ λ < 1`.
pub fn check_ratio_beta(profile: &HittingProfile) -> Report {
    let mut report = base_report("beta-ratio", profile);
    let Some(beta) = beta_hat(profile) else {
        return report.inapplicable("no adjacent pairs below u");
    };
    let lambda = profile.params().lambda();
    report.extreme("beta_hat", beta);
    report.extreme("beta_hat_times_lambda", beta * lambda);
    if !(beta * lambda < 1.0) {
        report.violation(format!("beta_hat * lambda = {} ≥ 1", beta * lambda));
    }
    if !(beta < 1.0) {
        report.violation(format!("beta_hat = {beta} ≥ 1"));
    }
    report
}

/// Exhaustive scan of `p(x+1,y) ≤ γ p(x,y)` over `0 ≤ x < εn − 1`,
/// `0 ≤ y ≤ (1−α) n b(x)`, together with monotonicity of the ratio in `y`.
pub fn check_gamma_ratio(params: &ModelParams, epsilon: f64, alpha: f64) -> Result<Report> {
    let lambda = params.lambda();
    if !(epsilon > 0.0 && epsilon < 1.0 / lambda) {
        return Err(BarwError::domain(format!(
            "need 0 < ε < 1/λ, got ε={epsilon}"
        )));
    }
    let (lo, hi) = alpha_range(lambda);
    if !(alpha > lo && alpha < hi) {
        return Err(BarwError::domain(format!(
            "alpha must lie in ({lo}, {hi}), got {alpha}"
        )));
    }
    let gamma = gamma_ratio(lambda, epsilon, alpha);
    let ln_gamma = gamma.ln();
    let n = params.n();
    let table = TransitionTable::new(*params);
    let mut report = Report::new("gamma-ratio")
        .param("lambda", lambda)
        .param("n", n)
        .param("epsilon", epsilon)
        .param("alpha", alpha)
        .param("gamma", gamma);
    let top = epsilon * n as f64 - 1.0;
    let mut max_ln_ratio = f64::NEG_INFINITY;
    let mut cells = 0usize;
    let mut x = 0usize;
    while (x as f64) < top {
        let m0 = (1.0 - alpha) * n as f64 * params.b(x);
        let ymax = m0.floor() as usize;
        let mut prev: Option<f64> = None;
        for y in 0..=ymax.min(n) {
            let r = table.logp(x + 1, y) - table.logp(x, y);
            cells += 1;
            max_ln_ratio = max_ln_ratio.max(r);
            if r > ln_gamma {
                report.violation(format!("x={x} y={y}: ratio {} > gamma {gamma}", r.exp()));
            }
            if let Some(p) = prev {
                if !(r > p) {
                    report.violation(format!("x={x} y={y}: ratio not increasing in y"));
                }
            }
            prev = Some(r);
        }
        x += 1;
    }
    report.extreme("max_ratio", max_ln_ratio.exp());
    report.extreme("grid_cells", cells as f64);
    Ok(report)
}

/// `(exp(−nb(1−ξ)²/4), P[Bin(n,b) < ξnb])`.
pub fn binomial_tail_bound(n: usize, b: f64, xi: f64) -> Result<(f64, f64)> {
    if !(b > 0.0 && b < 1.0) {
        return Err(BarwError::domain(format!("b must lie in (0, 1), got {b}")));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(BarwError::domain(format!(
            "xi must lie in (0, 1), got {xi}"
        )));
    }
    let mean = n as f64 * b;
    let bound = (-mean * (1.0 - xi).powi(2) / 4.0).exp();
    let cut = xi * mean;
    // Largest integer strictly below cut.
    let kmax = if cut.fract() == 0.0 {
        cut as i64 - 1
    } else {
        cut.floor() as i64
    };
    let exact = if kmax < 0 {
        0.0
    } else {
        let kmax = (kmax as usize).min(n);
        log_sum_exp_iter((0..=kmax).map(|k| binomial_logpmf(n, b, k))).exp()
    };
    Ok((bound, exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::make_bound_set;
    use crate::chain::{threshold_u, LevelMode};
    use crate::solver::hitting_profile;

    fn mp(lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(lambda, n).unwrap()
    }

    #[test]
    fn envelope_at_zero_is_one() {
        let b = make_bound_set(2.0, 2000, 0.05, None).unwrap();
        let (lo, hi) = envelope_bounds(&b, 0).unwrap();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_upper_decreasing() {
        let b = make_bound_set(2.0, 2000, 0.05, None).unwrap();
        let mut prev = f64::INFINITY;
        for x in 0..100 {
            let (_, hi) = envelope_bounds_ln(&b, x).unwrap();
            assert!(hi < prev);
            prev = hi;
        }
        assert!(envelope_bounds(&b, 100).is_err());
    }

    #[test]
    fn envelope_inapplicable() {
        let b = make_bound_set(2.0, 100, 0.3, None).unwrap();
        assert!(matches!(
            envelope_bounds(&b, 1),
            Err(BarwError::Precondition(_))
        ));
    }

    #[test]
    fn envelope_sandwich_x10() {
        let b = make_bound_set(2.0, 2000, 0.05, None).unwrap();
        let prof = hitting_profile(&mp(2.0, 2000), 100).unwrap();
        let (lo, hi) = envelope_bounds_ln(&b, 10).unwrap();
        assert!(lo <= prof.ln_phi(10) && prof.ln_phi(10) <= hi);
        assert!(check_envelope(&prof, &b).passed);
    }

    #[test]
    fn geometric_bound_zero() {
        let b = make_bound_set(1.5, 1200, 0.05, None).unwrap();
        assert_eq!(geometric_upper(&b, 0), LogValue::ONE);
    }

    #[test]
    fn geometric_bound_needs_window_threshold() {
        let params = mp(2.0, 100);
        let b = make_bound_set(2.0, 100, 0.05, None).unwrap();
        // eq − εn ≈ 29.66; u = 40 puts transient states above it.
        let prof = hitting_profile(&params, 40).unwrap();
        assert!(!check_geometric(&prof, &b).applicable);
        let u = threshold_u(&params, 0.05, LevelMode::Window).unwrap();
        let prof = hitting_profile(&params, u).unwrap();
        let r = check_geometric(&prof, &b);
        assert!(r.applicable && r.passed, "{r}");
    }

    #[test]
    fn kappa_ratio_small() {
        let params = mp(2.0, 50);
        let b = make_bound_set(2.0, 50, 0.05, None).unwrap();
        let r = check_ratio_kappa(&hitting_profile(&params, 10).unwrap(), &b);
        assert!(r.passed && r.applicable, "{r}");
        assert!(r.extreme_value("min_ratio").unwrap() > b.kappa_n.unwrap());
        let r1 = check_ratio_kappa(&hitting_profile(&params, 1).unwrap(), &b);
        assert!(!r1.applicable && r1.violations.is_empty());
    }

    #[test]
    fn mismatched_models_flagged() {
        let b = make_bound_set(2.0, 60, 0.05, None).unwrap();
        let r = check_ratio_kappa(&hitting_profile(&mp(2.0, 50), 10).unwrap(), &b);
        assert!(!r.passed);
    }

    #[test]
    fn beta_ratio_low_mode() {
        let params = mp(2.0, 2000);
        let u = threshold_u(&params, 0.01, LevelMode::Low).unwrap();
        let r = check_ratio_beta(&hitting_profile(&params, u).unwrap());
        assert!(r.passed, "{r}");
        assert!(r.extreme_value("beta_hat").unwrap() < 1.0);
        let r1 = check_ratio_beta(&hitting_profile(&params, 1).unwrap());
        assert!(!r1.applicable);
    }

    #[test]
    fn gamma_grid() {
        let r = check_gamma_ratio(&mp(2.0, 500), 0.05, 0.4233).unwrap();
        assert!(r.passed, "{r}");
        let g = gamma_ratio(2.0, 0.05, 0.4233);
        assert!(r.extreme_value("max_ratio").unwrap() <= g);
        assert!(check_gamma_ratio(&mp(2.0, 500), 0.6, 0.4233).is_err());
        assert!(check_gamma_ratio(&mp(2.0, 500), 0.05, 0.2).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        let (bound, exact) = binomial_tail_bound(100, 0.1, 0.5).unwrap();
        assert!((bound - 0.535_261_428_518_990_2).abs() < 1e-14);
        assert!((exact - 0.023_711_082_663_476_76).abs() < 1e-13);
        assert!(exact <= bound);

        let b10 = mp(2.0, 50).b(10);
        assert!((b10 - 0.268_128_018_414_255_7).abs() < 1e-14);
        let (bound, exact) = binomial_tail_bound(50, b10, (-0.05f64).exp()).unwrap();
        assert!(exact <= bound);

        let (bound, _) = binomial_tail_bound(100, 0.1, 1.0 - 1e-9).unwrap();
        assert!(bound > 1.0 - 1e-12);
        assert!(binomial_tail_bound(100, 0.0, 0.5).is_err());
    }
}
