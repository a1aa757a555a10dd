//! The mean-field count chain.
//!
//! On the complete graph with `n` sites (offspring may land on their parent's
//! own site), the number of occupied sites is a Markov chain on `{0, ..., n}`
//! whose one-step law from `x` is `Bin(n, b(x))` with
//! `b(x) = (λx/n) e^{-λx/n}`.

use statrs::function::gamma::ln_gamma;

use crate::error::{BarwError, Result};
use crate::logvalue::LogValue;

/// Offspring mean `λ > 1` and number of sites `n ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    n: usize,
}

impl ModelParams {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(BarwError::domain(format!(
                "offspring mean must be a finite value > 1, got {lambda}"
            )));
        }
        if n == 0 {
            return Err(BarwError::domain("number of sites must be at least 1"));
        }
        Ok(ModelParams { lambda, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn check_state(&self, x: usize) -> Result<()> {
        if x > self.n {
            return Err(BarwError::domain(format!(
                "state {x} outside [0, {}]",
                self.n
            )));
        }
        Ok(())
    }

    /// `b(x)` without the range check.
    pub(crate) fn b(&self, x: usize) -> f64 {
        let t = self.lambda * x as f64 / self.n as f64;
        t * (-t).exp()
    }
}

/// Probability that a given site ends a step with exactly one particle when
/// `x` sites were occupied: `b(x) = (λx/n) e^{-λx/n}`.
pub fn branch_prob(params: &ModelParams, x: usize) -> Result<f64> {
    params.check_state(x)?;
    Ok(params.b(x))
}

/// The level `(ln λ / λ) n` around which the chain fluctuates before dying.
pub fn equilibrium(params: &ModelParams) -> f64 {
    params.lambda.ln() / params.lambda * params.n as f64
}

/// Extinction probability of a Galton-Watson process with `Poi(mean)`
/// offspring: the root of `s = e^{-mean (1 - s)}` in `(0, 1)`.
///
/// Solved in the complementary variable `w = 1 - s`, where the equation reads
/// `-w - expm1(-mean w) = 0`. That keeps full relative precision on `w` when
/// `mean` is barely supercritical and `s` sits within `1e-9` of one.
pub fn gw_extinction_prob(mean: f64) -> Result<f64> {
    if !(mean > 1.0 + 1e-12) || !mean.is_finite() {
        return Err(BarwError::domain(format!(
            "offspring mean must exceed 1 for a nontrivial fixed point, got {mean}"
        )));
    }
    // g > 0 on (0, w*), g < 0 on (w*, 1].
    let g = |w: f64| -w - (-mean * w).exp_m1();
    let dg = |w: f64| -1.0 + mean * (-mean * w).exp();

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = dg(w);
        if d == 0.0 {
            break;
        }
        let next = w - g(w) / d;
        if next > lo && next < hi {
            w = next;
        }
    }
    Ok(1.0 - w)
}

/// `ln C(n, y)` via log-gamma.
pub(crate) fn ln_choose(n: usize, y: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(y as f64 + 1.0) - ln_gamma((n - y) as f64 + 1.0)
}

/// `ln P[Bin(n, p) = y]` given a precomputed `ln C(n, y)`.
pub(crate) fn binomial_logpmf_with(ln_c: f64, n: usize, p: f64, y: usize) -> f64 {
    if p == 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if y == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_c + y as f64 * p.ln() + (n - y) as f64 * (-p).ln_1p()
}

/// `ln P[Bin(n, p) = y]`.
pub fn binomial_logpmf(n: usize, p: f64, y: usize) -> f64 {
    if y > n {
        return f64::NEG_INFINITY;
    }
    binomial_logpmf_with(ln_choose(n, y), n, p, y)
}

/// Log of the one-step transition probability `p(x, y) = P[Bin(n, b(x)) = y]`.
pub fn transition_logpmf(params: &ModelParams, x: usize, y: usize) -> Result<LogValue> {
    params.check_state(x)?;
    params.check_state(y)?;
    Ok(LogValue::from_ln(binomial_logpmf(params.n, params.b(x), y)))
}

/// Cached `ln C(n, ·)` so whole rows of the kernel can be produced cheaply.
/// Values are bit-identical to [`transition_logpmf`].
#[derive(Clone, Debug)]
pub struct TransitionTable {
    params: ModelParams,
    ln_c: Vec<f64>,
}

impl TransitionTable {
    pub fn new(params: ModelParams) -> Self {
        let ln_c = (0..=params.n).map(|y| ln_choose(params.n, y)).collect();
        TransitionTable { params, ln_c }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn logp(&self, x: usize, y: usize) -> f64 {
        binomial_logpmf_with(self.ln_c[y], self.params.n, self.params.b(x), y)
    }

    /// `ln p(x, y)` for `y = 0..=n`.
    pub fn row(&self, x: usize) -> Vec<f64> {
        let b = self.params.b(x);
        (0..=self.params.n)
            .map(|y| binomial_logpmf_with(self.ln_c[y], self.params.n, b, y))
            .collect()
    }
}

/// How a threshold level is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelMode {
    /// `u = ⌈εn⌉`.
    Low,
    /// `u = ⌈eq − εn⌉`.
    Window,
    /// Caller-supplied `u`.
    Custom,
}

impl std::str::FromStr for LevelMode {
    type Err = BarwError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(LevelMode::Low),
            "window" => Ok(LevelMode::Window),
            "custom" => Ok(LevelMode::Custom),
            other => Err(BarwError::domain(format!("unknown level mode '{other}'"))),
        }
    }
}

/// A resolved threshold `u` for the upper passage time `T_u^+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSpec {
    pub epsilon: f64,
    pub mode: LevelMode,
    pub u: usize,
}

impl LevelSpec {
    pub fn resolve(
        params: &ModelParams,
        epsilon: f64,
        mode: LevelMode,
        custom_u: Option<usize>,
    ) -> Result<Self> {
        let u = match mode {
            LevelMode::Custom => {
                let u =
                    custom_u.ok_or_else(|| BarwError::domain("custom level mode requires u"))?;
                if u < 1 || u > params.n {
                    return Err(BarwError::domain(format!(
                        "threshold u={u} outside [1, {}]",
                        params.n
                    )));
                }
                u
            }
            m => threshold_u(params, epsilon, m)?,
        };
        Ok(LevelSpec { epsilon, mode, u })
    }
}

/// Ceiling that ignores representation noise: values within `1e-9` (relative)
/// of an integer are treated as that integer.
fn robust_ceil(r: f64) -> f64 {
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * r.abs().max(1.0) {
        nearest
    } else {
        r.ceil()
    }
}

/// Integer threshold for `{X_t ≥ r}`: `⌈εn⌉` in low mode, `⌈eq − εn⌉` in
/// window mode.
pub fn threshold_u(params: &ModelParams, epsilon: f64, mode: LevelMode) -> Result<usize> {
    let n = params.n as f64;
    let r = match mode {
        LevelMode::Low => {
            if !(epsilon > 0.0) {
                return Err(BarwError::domain(format!(
                    "epsilon must be > 0, got {epsilon}"
                )));
            }
            epsilon * n
        }
        LevelMode::Window => {
            let cap = params.lambda.ln() / params.lambda;
            if !(epsilon > 0.0 && epsilon < cap) {
                return Err(BarwError::domain(format!(
                    "window mode needs 0 < epsilon < ln(λ)/λ = {cap}, got {epsilon}"
                )));
            }
            equilibrium(params) - epsilon * n
        }
        LevelMode::Custom => {
            return Err(BarwError::domain("custom mode has no derived threshold"));
        }
    };
    let u = robust_ceil(r);
    if !(u >= 1.0 && u <= n) {
        return Err(BarwError::domain(format!(
            "threshold {u} outside [1, {}]",
            params.n
        )));
    }
    Ok(u as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mp(lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(lambda, n).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 10).is_err());
        assert!(ModelParams::new(0.5, 10).is_err());
        assert!(ModelParams::new(f64::NAN, 10).is_err());
        assert!(ModelParams::new(2.0, 0).is_err());
        assert!(ModelParams::new(1.0001, 1).is_ok());
    }

    #[test]
    fn branch_prob_examples() {
        assert_eq!(branch_prob(&mp(2.0, 100), 0).unwrap(), 0.0);
        assert_relative_eq!(
            branch_prob(&mp(2.0, 100), 50).unwrap(),
            (-1f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            branch_prob(&mp(1.5, 1200), 100).unwrap(),
            0.110_312_112_823_074_43,
            max_relative = 1e-14
        );
        assert!(matches!(
            branch_prob(&mp(2.0, 100), 101),
            Err(BarwError::Domain(_))
        ));
    }

    #[test]
    fn branch_prob_unimodal() {
        for &(lambda, n) in &[(1.5, 1200usize), (2.0, 999), (6.0, 10_000), (3.3, 17)] {
            let p = mp(lambda, n);
            let peak_lo = (n as f64 / lambda).floor() as usize;
            let peak_hi = (n as f64 / lambda).ceil() as usize;
            for x in 0..peak_lo {
                assert!(p.b(x + 1) > p.b(x), "λ={lambda} n={n} x={x}");
            }
            for x in peak_hi..n {
                assert!(p.b(x + 1) < p.b(x), "λ={lambda} n={n} x={x}");
            }
            for x in 0..=n {
                assert!(p.b(x) <= (-1f64).exp() + 1e-16);
            }
        }
    }

    #[test]
    fn equilibrium_examples() {
        assert_relative_eq!(
            equilibrium(&mp(std::f64::consts::E, 100)),
            36.787_944_117_144_23,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            equilibrium(&mp(1.5, 1200)),
            324.372_086_486_531_5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            equilibrium(&mp(6.0, 1200)),
            358.351_893_845_611,
            max_relative = 1e-14
        );
    }

    /// Plain bisection on `s − e^{−m(1−s)}` as an independent oracle.
    fn bisect_q(m: f64) -> f64 {
        let f = |s: f64| s - (-m * (1.0 - s)).exp();
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn gw_extinction_examples() {
        let q2 = gw_extinction_prob(2.0).unwrap();
        assert_relative_eq!(q2, 0.203_187_869_979_979_95, max_relative = 1e-13);
        assert_relative_eq!(q2, bisect_q(2.0), max_relative = 1e-13);
        let q15 = gw_extinction_prob(1.5).unwrap();
        assert_relative_eq!(q15, 0.417_188_356_134_188_6, max_relative = 1e-13);
        for &m in &[1.01, 1.5, 2.0, 6.0, 20.0] {
            let q = gw_extinction_prob(m).unwrap();
            assert!(q > 0.0 && q < 1.0);
            assert!((q - (-m * (1.0 - q)).exp()).abs() <= 1e-14, "m={m}");
        }
    }

    #[test]
    fn gw_extinction_near_critical() {
        for &m in &[1.0 + 2e-12, 1.0 + 1e-10, 1.000_001] {
            let q = gw_extinction_prob(m).unwrap();
            assert!(q > 0.0 && q < 1.0, "m={m} q={q}");
            assert!((q - (-m * (1.0 - q)).exp()).abs() <= 1e-14);
            // Near criticality w = 1 - q ≈ 2(m - 1).
            let w = 1.0 - q;
            assert!((w / (2.0 * (m - 1.0)) - 1.0).abs() < 1e-2, "m={m} w={w}");
        }
        assert!(gw_extinction_prob(1.0).is_err());
        assert!(gw_extinction_prob(0.7).is_err());
        assert!(gw_extinction_prob(1.0 + 1e-13).is_err());
    }

    #[test]
    fn gw_extinction_strictly_decreasing() {
        let grid: Vec<f64> = (0..400).map(|i| 1.001 + 0.05 * i as f64).collect();
        let qs: Vec<f64> = grid
            .iter()
            .map(|&m| gw_extinction_prob(m).unwrap())
            .collect();
        for w in qs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn logpmf_examples() {
        let p = mp(2.0, 3);
        assert_eq!(transition_logpmf(&p, 0, 0).unwrap(), LogValue::ONE);
        assert_eq!(transition_logpmf(&p, 0, 2).unwrap().sign(), 0);
        let v = transition_logpmf(&p, 1, 0).unwrap();
        assert_relative_eq!(v.ln(), -1.256_919_149_953_425_6, max_relative = 1e-14);
        assert!(transition_logpmf(&p, 4, 0).is_err());
    }

    #[test]
    fn logpmf_rows_normalized() {
        for &(lambda, n) in &[(1.5, 50usize), (2.0, 3), (6.0, 1200), (1.5, 10_000)] {
            let p = mp(lambda, n);
            let table = TransitionTable::new(p);
            let step = (n / 37).max(1);
            for x in (0..=n).step_by(step) {
                let s: f64 = table.row(x).iter().map(|l| l.exp()).sum();
                assert!((s - 1.0).abs() <= 1e-10, "λ={lambda} n={n} x={x} sum={s}");
            }
        }
        let p = mp(1.5, 50);
        let s: f64 = (0..=50)
            .map(|y| transition_logpmf(&p, 10, y).unwrap().to_f64())
            .sum();
        assert!((s - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn table_matches_pointwise() {
        let p = mp(2.7, 60);
        let t = TransitionTable::new(p);
        for x in [0, 1, 13, 60] {
            for y in [0, 1, 30, 60] {
                assert_eq!(t.logp(x, y), transition_logpmf(&p, x, y).unwrap().ln_abs());
            }
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(
            threshold_u(&mp(1.5, 1200), 0.05, LevelMode::Window).unwrap(),
            265
        );
        assert_eq!(threshold_u(&mp(2.0, 100), 0.05, LevelMode::Low).unwrap(), 5);
        assert_eq!(
            threshold_u(&mp(6.0, 1200), 0.05, LevelMode::Window).unwrap(),
            299
        );
        assert_eq!(
            threshold_u(&mp(2.0, 2000), 0.05, LevelMode::Low).unwrap(),
            100
        );
        assert_eq!(
            threshold_u(&mp(2.0, 2000), 0.01, LevelMode::Low).unwrap(),
            20
        );
        assert!(threshold_u(&mp(2.0, 100), 0.5, LevelMode::Window).is_err());
        assert!(threshold_u(&mp(2.0, 100), 2.0, LevelMode::Low).is_err());
        assert!(threshold_u(&mp(2.0, 100), 0.0, LevelMode::Low).is_err());
    }

    #[test]
    fn level_spec_custom() {
        let p = mp(2.0, 50);
        assert_eq!(
            LevelSpec::resolve(&p, 0.05, LevelMode::Custom, Some(10))
                .unwrap()
                .u,
            10
        );
        assert!(LevelSpec::resolve(&p, 0.05, LevelMode::Custom, None).is_err());
        assert!(LevelSpec::resolve(&p, 0.05, LevelMode::Custom, Some(51)).is_err());
        assert_eq!(
            LevelSpec::resolve(&p, 0.1, LevelMode::Low, None).unwrap().u,
            5
        );
    }

    #[test]
    fn growth_factor_below_window() {
        // n b(x) / x = λ e^{−λx/n} ≥ e^{λε} whenever x ≤ eq − εn.
        for &(lambda, n, eps) in &[(1.5, 1200usize, 0.05), (6.0, 1200, 0.05), (2.0, 5000, 0.1)] {
            let p = mp(lambda, n);
            let top = equilibrium(&p) - eps * n as f64;
            let floor = (lambda * eps).exp();
            for x in 1..=(top.floor() as usize) {
                let ratio = n as f64 * p.b(x) / x as f64;
                assert!(ratio >= floor * (1.0 - 1e-14), "x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn b_bounded(lambda in 1.0001f64..40.0, n in 1usize..5000, frac in 0.0f64..=1.0) {
            let p = mp(lambda, n);
            let x = ((n as f64) * frac) as usize;
            let b = branch_prob(&p, x).unwrap();
            prop_assert!((0.0..=(-1f64).exp() + 1e-16).contains(&b));
        }
    }
}
