use crate::bounds::kappa_n;
use crate::chain::{ModelParams, TransitionTable};
use crate::error::{BarwError, Result};
use crate::logvalue::{log_sum_exp_iter, LogValue};

use super::linear::{SolveFault, TransientSystem};
use super::{HARMONICITY_TOL, NATIVE_FLOOR, VALUE_ITERATION_MAX_SWEEPS, VALUE_ITERATION_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveMethod {
    DenseLogDomain,
    DenseNative,
    ValueIteration,
}

impl SolveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMethod::DenseLogDomain => "dense-logdomain",
            SolveMethod::DenseNative => "dense-native",
            SolveMethod::ValueIteration => "value-iteration",
        }
    }
}

impl std::str::FromStr for SolveMethod {
    type Err = BarwError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-logdomain" => Ok(SolveMethod::DenseLogDomain),
            "dense-native" => Ok(SolveMethod::DenseNative),
            "value-iteration" => Ok(SolveMethod::ValueIteration),
            other => Err(BarwError::domain(format!("unknown solve method '{other}'"))),
        }
    }
}

/// `φ(x) = P_x[T_0 < T_u^+]` on `x ∈ {0, …, u−1}`, stored in log form.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingProfile {
    params: ModelParams,
    u: usize,
    log_phi: Vec<LogValue>,
    residual: f64,
    method: SolveMethod,
}

impl HittingProfile {
    /// Rebuilds a profile from stored `ln φ` values, recomputing the
    /// harmonicity residual. Fails if the values violate the profile
    /// invariants or miss the tolerance.
    pub fn from_log_phi(
        params: ModelParams,
        u: usize,
        ln_phi: &[f64],
        method: SolveMethod,
    ) -> Result<Self> {
        check_u(&params, u)?;
        if ln_phi.len() != u {
            return Err(BarwError::domain(format!(
                "expected {u} profile entries, got {}",
                ln_phi.len()
            )));
        }
        if ln_phi[0] != 0.0 {
            return Err(BarwError::domain("profile must have ln φ(0) = 0"));
        }
        if let Some(x) = ln_phi.iter().position(|v| !v.is_finite() || *v > 0.0) {
            return Err(BarwError::domain(format!(
                "profile entry at x={x} is not the log of a probability in (0, 1]"
            )));
        }
        let log_phi: Vec<LogValue> = ln_phi.iter().map(|&l| LogValue::from_ln(l)).collect();
        let table = TransitionTable::new(params);
        let residual = harmonicity_residual(&table, &log_phi);
        if !(residual <= HARMONICITY_TOL) {
            return Err(BarwError::SolverFailure {
                residual,
                tolerance: HARMONICITY_TOL,
            });
        }
        Ok(HittingProfile {
            params,
            u,
            log_phi,
            residual,
            method,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn u(&self) -> usize {
        self.u
    }

    pub fn log_phi(&self) -> &[LogValue] {
        &self.log_phi
    }

    /// `ln φ(x)` for `x < u`.
    pub fn ln_phi(&self, x: usize) -> f64 {
        self.log_phi[x].ln()
    }

    /// `φ(x)` as an `f64`; underflows to zero for very small values.
    pub fn phi(&self, x: usize) -> f64 {
        self.log_phi[x].to_f64()
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }
}

fn check_u(params: &ModelParams, u: usize) -> Result<()> {
    if u < 1 || u > params.n() {
        return Err(BarwError::domain(format!(
            "threshold u={u} outside [1, {}]",
            params.n()
        )));
    }
    Ok(())
}

/// Hitting profile using the fastest method that is safe for `(params, u)`.
///
/// The native dense solve is used only when `φ(x) ≥ κ_n^x` (the one-step
/// coupling floor) certifies that no entry drops below `1e-280`; otherwise
/// the log-domain elimination runs. A native solve that misses the residual
/// tolerance also falls back to the log domain.
pub fn hitting_profile(params: &ModelParams, u: usize) -> Result<HittingProfile> {
    check_u(params, u)?;
    if native_is_certified(params, u) {
        if let Ok(p) = hitting_profile_with(params, u, SolveMethod::DenseNative) {
            return Ok(p);
        }
    }
    hitting_profile_with(params, u, SolveMethod::DenseLogDomain)
}

fn native_is_certified(params: &ModelParams, u: usize) -> bool {
    match kappa_n(params.lambda(), params.n()) {
        Some(k) if k > 0.0 => (u.saturating_sub(1)) as f64 * k.ln() >= NATIVE_FLOOR.ln(),
        _ => false,
    }
}

pub fn hitting_profile_with(
    params: &ModelParams,
    u: usize,
    method: SolveMethod,
) -> Result<HittingProfile> {
    check_u(params, u)?;
    let table = TransitionTable::new(*params);
    let log_phi = if u == 1 {
        vec![LogValue::ONE]
    } else {
        match method {
            SolveMethod::DenseLogDomain => solve_log_domain(&table, u)?,
            SolveMethod::DenseNative => solve_native(&table, u)?,
            SolveMethod::ValueIteration => value_iteration(&table, u)?,
        }
    };
    let residual = harmonicity_residual(&table, &log_phi);
    if !(residual <= HARMONICITY_TOL) {
        return Err(BarwError::SolverFailure {
            residual,
            tolerance: HARMONICITY_TOL,
        });
    }
    Ok(HittingProfile {
        params: *params,
        u,
        log_phi,
        residual,
        method,
    })
}

/// Log-domain pieces of the first-step system on transient states `1..u`:
/// `(ln Q, ln exit, ln p(·,0))`.
fn log_blocks(table: &TransitionTable, u: usize) -> (Vec<LogValue>, Vec<LogValue>, Vec<LogValue>) {
    let m = u - 1;
    let mut q = Vec::with_capacity(m * m);
    let mut exit = Vec::with_capacity(m);
    let mut to_zero = Vec::with_capacity(m);
    for x in 1..u {
        let row = table.row(x);
        q.extend(row[1..u].iter().map(|&l| LogValue::from_ln(l)));
        let out = log_sum_exp_iter(std::iter::once(row[0]).chain(row[u..].iter().copied()));
        exit.push(LogValue::from_ln(out));
        to_zero.push(LogValue::from_ln(row[0]));
    }
    (q, exit, to_zero)
}

fn map_fault(f: SolveFault) -> BarwError {
    match f {
        SolveFault::Singular(k) => BarwError::Singular { pivot: k + 1 },
        SolveFault::NonFinite(i) => BarwError::Overflow { state: i + 1 },
    }
}

fn solve_log_domain(table: &TransitionTable, u: usize) -> Result<Vec<LogValue>> {
    let (q, exit, rhs) = log_blocks(table, u);
    let sys = TransientSystem::new(u - 1, q, exit);
    let v = sys.solve(&rhs).map_err(map_fault)?;
    Ok(std::iter::once(LogValue::ONE).chain(v).collect())
}

fn solve_native(table: &TransitionTable, u: usize) -> Result<Vec<LogValue>> {
    let (q, exit, rhs) = log_blocks(table, u);
    let q = q.into_iter().map(LogValue::to_f64).collect();
    let exit = exit.into_iter().map(LogValue::to_f64).collect();
    let rhs: Vec<f64> = rhs.into_iter().map(LogValue::to_f64).collect();
    let sys = TransientSystem::new(u - 1, q, exit);
    let v = sys.solve(&rhs).map_err(map_fault)?;
    // An underflowed entry means the certification was wrong; let the caller
    // fall back to the log domain.
    if v.iter().any(|&p| !(p > 0.0)) {
        return Err(BarwError::SolverFailure {
            residual: f64::INFINITY,
            tolerance: HARMONICITY_TOL,
        });
    }
    Ok(std::iter::once(LogValue::ONE)
        .chain(v.into_iter().map(LogValue::from_f64))
        .collect())
}

/// Monotone fixed-point iteration `φ ← p(·,0) + Q φ` from `φ ≡ 0`.
fn value_iteration(table: &TransitionTable, u: usize) -> Result<Vec<LogValue>> {
    // ln p(x, y) for x in 1..u, y in 0..u
    let logp: Vec<Vec<f64>> = (1..u).map(|x| table.row(x)[..u].to_vec()).collect();
    let mut cur = vec![f64::NEG_INFINITY; u];
    cur[0] = 0.0;
    let mut next = cur.clone();
    let mut change = f64::INFINITY;
    for _ in 0..VALUE_ITERATION_MAX_SWEEPS {
        for x in 1..u {
            let row = &logp[x - 1];
            next[x] = log_sum_exp_iter(row.iter().zip(&cur).map(|(a, b)| a + b));
        }
        change = cur
            .iter()
            .zip(&next)
            .skip(1)
            .map(|(a, b)| {
                if a.is_finite() {
                    (a - b).abs()
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        std::mem::swap(&mut cur, &mut next);
        if change < VALUE_ITERATION_TOL {
            return Ok(cur.into_iter().map(LogValue::from_ln).collect());
        }
    }
    Err(BarwError::SolverFailure {
        residual: change,
        tolerance: VALUE_ITERATION_TOL,
    })
}

/// `max_{1≤x<u} | ln Σ_{y<u} p(x,y) φ(y) − ln φ(x) |`.
pub(crate) fn harmonicity_residual(table: &TransitionTable, log_phi: &[LogValue]) -> f64 {
    let u = log_phi.len();
    (1..u)
        .map(|x| {
            let row = table.row(x);
            let lhs = log_sum_exp_iter(row[..u].iter().zip(log_phi).map(|(a, b)| a + b.ln()));
            (lhs - log_phi[x].ln()).abs()
        })
        .fold(0.0, |acc: f64, r| {
            if r.is_nan() {
                f64::INFINITY
            } else {
                acc.max(r)
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(lambda, n).unwrap()
    }

    /// Binomial pmf by repeated multiplication (no log-gamma).
    fn pmf(n: usize, p: f64, y: usize) -> f64 {
        let mut c = 1.0;
        for k in 0..y {
            c = c * (n - k) as f64 / (k + 1) as f64;
        }
        c * p.powi(y as i32) * (1.0 - p).powi((n - y) as i32)
    }

    fn b(lambda: f64, n: usize, x: usize) -> f64 {
        let t = lambda * x as f64 / n as f64;
        t * (-t).exp()
    }

    /// `P_x[T_0 < T_u^+, T_0 ≤ horizon]` by dynamic programming over time.
    fn horizon_dp(lambda: f64, n: usize, u: usize, horizon: usize) -> Vec<f64> {
        let p: Vec<Vec<f64>> = (0..u)
            .map(|x| (0..u).map(|y| pmf(n, b(lambda, n, x), y)).collect())
            .collect();
        let mut f = vec![0.0; u];
        f[0] = 1.0;
        for _ in 0..horizon {
            let mut g = vec![0.0; u];
            g[0] = 1.0;
            for x in 1..u {
                g[x] = (0..u).map(|y| p[x][y] * f[y]).sum();
            }
            f = g;
        }
        f
    }

    #[test]
    fn tiny_closed_form() {
        let params = mp(2.0, 3);
        let b1 = b(2.0, 3, 1);
        let p10 = (1.0 - b1).powi(3);
        let p11 = 3.0 * b1 * (1.0 - b1).powi(2);
        let closed = p10 / (1.0 - p11);
        assert!((closed - 0.511_933_484_909_831_2).abs() < 1e-15);
        for method in [
            SolveMethod::DenseLogDomain,
            SolveMethod::DenseNative,
            SolveMethod::ValueIteration,
        ] {
            let prof = hitting_profile_with(&params, 2, method).unwrap();
            assert!((prof.phi(1) - closed).abs() < 1e-12, "{method:?}");
            assert_eq!(prof.ln_phi(0), 0.0);
        }
    }

    #[test]
    fn u_one_is_trivial() {
        let prof = hitting_profile(&mp(3.0, 40), 1).unwrap();
        assert_eq!(prof.log_phi(), &[LogValue::ONE]);
        assert_eq!(prof.residual(), 0.0);
    }

    #[test]
    fn u_out_of_range() {
        assert!(matches!(
            hitting_profile(&mp(2.0, 10), 0),
            Err(BarwError::Domain(_))
        ));
        assert!(matches!(
            hitting_profile(&mp(2.0, 10), 11),
            Err(BarwError::Domain(_))
        ));
    }

    #[test]
    fn short_horizon_dp_n20_u5() {
        let params = mp(2.0, 20);
        let prof = hitting_profile(&params, 5).unwrap();
        let dp = horizon_dp(2.0, 20, 5, 40);
        for (x, d) in dp.iter().enumerate() {
            assert!((prof.phi(x) - d).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn certified_horizon_dp_small_grid() {
        for n in 2..=12usize {
            for u in 1..=4usize.min(n) {
                for &lambda in &[1.3, 2.0, 4.5] {
                    // Staying transient for one step has probability at most 1 − min p(x,0).
                    let stay = (1..u)
                        .map(|x| 1.0 - pmf(n, b(lambda, n, x), 0))
                        .fold(0.0, f64::max);
                    let horizon = if stay == 0.0 {
                        1
                    } else {
                        (1e-9f64.ln() / stay.ln()).ceil() as usize + 1
                    };
                    let dp = horizon_dp(lambda, n, u, horizon);
                    let prof = hitting_profile(&mp(lambda, n), u).unwrap();
                    for (x, d) in dp.iter().enumerate() {
                        assert!(
                            (prof.phi(x) - d).abs() < 1e-6,
                            "λ={lambda} n={n} u={u} x={x}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn methods_agree() {
        for &(lambda, n, u) in &[(2.0, 50usize, 10usize), (1.5, 300, 67), (6.0, 300, 75)] {
            let params = mp(lambda, n);
            let a = hitting_profile_with(&params, u, SolveMethod::DenseLogDomain).unwrap();
            let c = hitting_profile_with(&params, u, SolveMethod::ValueIteration).unwrap();
            for x in 0..u {
                let (la, lc) = (a.ln_phi(x), c.ln_phi(x));
                assert!(
                    (la - lc).abs() <= 1e-9 * la.abs().max(1.0),
                    "λ={lambda} x={x}: {la} vs {lc}"
                );
            }
            if native_is_certified(&params, u) {
                let b = hitting_profile_with(&params, u, SolveMethod::DenseNative).unwrap();
                for x in 0..u {
                    let (la, lb) = (a.ln_phi(x), b.ln_phi(x));
                    assert!((la - lb).abs() <= 1e-9 * la.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn profile_invariants_and_determinism() {
        let params = mp(6.0, 1200);
        let a = hitting_profile(&params, 299).unwrap();
        assert_eq!(a.method(), SolveMethod::DenseLogDomain);
        assert!(a.residual() <= HARMONICITY_TOL);
        assert!(a.log_phi().iter().all(|v| v.sign() == 1));
        let b = hitting_profile(&params, 299).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rebuild_from_stored_values() {
        let params = mp(2.0, 50);
        let p = hitting_profile(&params, 10).unwrap();
        let ln: Vec<f64> = (0..10).map(|x| p.ln_phi(x)).collect();
        let q = HittingProfile::from_log_phi(params, 10, &ln, p.method()).unwrap();
        assert_eq!(p.log_phi(), q.log_phi());
        let mut bad = ln.clone();
        bad[3] += 0.1;
        assert!(matches!(
            HittingProfile::from_log_phi(params, 10, &bad, p.method()),
            Err(BarwError::SolverFailure { .. })
        ));
        assert!(HittingProfile::from_log_phi(params, 10, &ln[..9], p.method()).is_err());
    }
}
