use crate::chain::{ModelParams, TransitionTable};
use crate::error::{BarwError, Result};

use super::kernel::TiltedKernel;
use super::linear::{SolveFault, TransientSystem};
use super::UNCONDITIONAL_MAX_N;

/// Expected number of steps (or visits) indexed by starting state.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeProfile {
    /// `u` for conditioned profiles, `n` for the unconditioned one.
    pub scope: usize,
    pub values: Vec<f64>,
    pub conditional: bool,
}

impl TimeProfile {
    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn tilted_system(kernel: &TiltedKernel) -> TransientSystem<f64> {
    let u = kernel.u();
    let m = u - 1;
    let mut q = Vec::with_capacity(m * m);
    let mut exit = Vec::with_capacity(m);
    for x in 1..u {
        let row = kernel.row(x);
        q.extend_from_slice(&row[1..u]);
        exit.push(row[0]);
    }
    TransientSystem::new(m, q, exit)
}

fn solve_tilted(kernel: &TiltedKernel, rhs: &[f64]) -> Result<Vec<f64>> {
    let sys = tilted_system(kernel);
    let v = sys.solve(rhs).map_err(|f| match f {
        SolveFault::Singular(k) => BarwError::Singular { pivot: k + 1 },
        SolveFault::NonFinite(i) => BarwError::Overflow { state: i + 1 },
    })?;
    Ok(std::iter::once(0.0).chain(v).collect())
}

/// `E_x[T_0 | T_0 < T_u^+]` for `x < u`.
pub fn conditional_expected_extinction(kernel: &TiltedKernel) -> Result<TimeProfile> {
    let u = kernel.u();
    let values = solve_tilted(kernel, &vec![1.0; u - 1])?;
    Ok(TimeProfile {
        scope: u,
        values,
        conditional: true,
    })
}

/// `E_x[H | T_0 < T_u^+]` where `H` counts the steps spent strictly between
/// `δn` and `u`.
pub fn conditional_occupation_time(kernel: &TiltedKernel, delta: f64) -> Result<TimeProfile> {
    let u = kernel.u();
    let n = kernel.source().params().n() as f64;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BarwError::domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let floor = delta * n;
    if floor >= u as f64 {
        return Err(BarwError::domain(format!(
            "band ({floor}, {u}) is empty: δn must be below u"
        )));
    }
    let rhs: Vec<f64> = (1..u)
        .map(|x| if (x as f64) > floor { 1.0 } else { 0.0 })
        .collect();
    let values = solve_tilted(kernel, &rhs)?;
    Ok(TimeProfile {
        scope: u,
        values,
        conditional: true,
    })
}

/// `E_x[T_0]` for every `x ∈ {0, …, n}`, in native floating point.
///
/// These grow exponentially in `n`, so `n` is capped and any overflow is
/// reported with the first state at which it appeared.
pub fn unconditional_expected_extinction(params: &ModelParams) -> Result<TimeProfile> {
    let n = params.n();
    if n > UNCONDITIONAL_MAX_N {
        return Err(BarwError::domain(format!(
            "unconditional expected times are limited to n ≤ {UNCONDITIONAL_MAX_N}, got {n}"
        )));
    }
    let table = TransitionTable::new(*params);
    let mut q = Vec::with_capacity(n * n);
    let mut exit = Vec::with_capacity(n);
    for x in 1..=n {
        let row = table.row(x);
        q.extend(row[1..].iter().map(|l| l.exp()));
        exit.push(row[0].exp());
    }
    let sys = TransientSystem::new(n, q, exit);
    let v = sys.solve(&vec![1.0; n]).map_err(|f| match f {
        SolveFault::Singular(k) => BarwError::Singular { pivot: k + 1 },
        SolveFault::NonFinite(i) => BarwError::Overflow { state: i + 1 },
    })?;
    Ok(TimeProfile {
        scope: n,
        values: std::iter::once(0.0).chain(v).collect(),
        conditional: false,
    })
}
