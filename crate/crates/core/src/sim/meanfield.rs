use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Binomial, Distribution};

use crate::chain::ModelParams;
use crate::error::{BarwError, Result};
use crate::solver::TiltedKernel;

/// Exact `Bin(n, b(x))` draw of the next count.
pub fn step_meanfield<R: Rng + ?Sized>(params: &ModelParams, x: usize, rng: &mut R) -> usize {
    assert!(x <= params.n(), "state {x} exceeds n = {}", params.n());
    if x == 0 {
        return 0;
    }
    let law = Binomial::new(params.n() as u64, params.b(x)).expect("b(x) lies in [0, 1]");
    law.sample(rng) as usize
}

/// Sample path `X_0, X_1, …` of a count chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub absorbed_at_zero: bool,
    pub crossed_u: bool,
    /// Stopped by the step limit before either event.
    pub truncated: bool,
    pub u: Option<usize>,
}

impl Trajectory {
    /// Number of transitions taken.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// How an unrecorded run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Absorbed,
    Crossed,
    Truncated,
}

/// Runs the chain from `x0`, calling `visit` on each state after the first.
fn drive<R: Rng + ?Sized>(
    params: &ModelParams,
    x0: usize,
    u: Option<usize>,
    max_steps: u64,
    rng: &mut R,
    mut visit: impl FnMut(usize),
) -> (Outcome, u64) {
    let stop = |x: usize| {
        if x == 0 {
            Some(Outcome::Absorbed)
        } else if u.is_some_and(|u| x >= u) {
            Some(Outcome::Crossed)
        } else {
            None
        }
    };
    let mut x = x0;
    let mut t = 0u64;
    loop {
        if let Some(o) = stop(x) {
            return (o, t);
        }
        if t == max_steps {
            return (Outcome::Truncated, t);
        }
        x = step_meanfield(params, x, rng);
        t += 1;
        visit(x);
    }
}

pub(crate) fn run_outcome<R: Rng + ?Sized>(
    params: &ModelParams,
    x0: usize,
    u: Option<usize>,
    max_steps: u64,
    rng: &mut R,
) -> (Outcome, u64) {
    drive(params, x0, u, max_steps, rng, |_| {})
}

/// Iterates [`step_meanfield`] until the count hits 0, reaches `u`, or
/// `max_steps` transitions have been taken.
pub fn run_to_absorption<R: Rng + ?Sized>(
    params: &ModelParams,
    x0: usize,
    u: Option<usize>,
    max_steps: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    params.check_state(x0)?;
    let mut states = vec![x0];
    let (outcome, _) = drive(params, x0, u, max_steps, rng, |x| states.push(x));
    Ok(Trajectory {
        states,
        absorbed_at_zero: outcome == Outcome::Absorbed,
        crossed_u: outcome == Outcome::Crossed,
        truncated: outcome == Outcome::Truncated,
        u,
    })
}

/// Row samplers for the tilted chain, built once per kernel.
#[derive(Clone, Debug)]
pub struct ConditionedSampler {
    u: usize,
    rows: Vec<Option<WeightedIndex<f64>>>,
}

impl ConditionedSampler {
    pub fn new(kernel: &TiltedKernel) -> Result<Self> {
        let rows = kernel
            .rows()
            .iter()
            .enumerate()
            .map(|(x, row)| {
                if x == 0 {
                    return Ok(None);
                }
                WeightedIndex::new(row)
                    .map(Some)
                    .map_err(|e| BarwError::domain(format!("tilted row {x}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(ConditionedSampler {
            u: kernel.u(),
            rows,
        })
    }

    pub fn u(&self) -> usize {
        self.u
    }

    /// Samples a path from `x0` until it reaches 0.
    pub fn sample_path<R: Rng + ?Sized>(&self, x0: usize, rng: &mut R) -> Result<Trajectory> {
        let mut states = vec![x0];
        self.walk(x0, rng, |x| states.push(x))?;
        Ok(Trajectory {
            states,
            absorbed_at_zero: true,
            crossed_u: false,
            truncated: false,
            u: Some(self.u),
        })
    }

    /// Number of steps to reach 0 from `x0`, without recording the path.
    pub fn path_length<R: Rng + ?Sized>(&self, x0: usize, rng: &mut R) -> Result<u64> {
        self.walk(x0, rng, |_| {})
    }

    fn walk<R: Rng + ?Sized>(
        &self,
        x0: usize,
        rng: &mut R,
        mut visit: impl FnMut(usize),
    ) -> Result<u64> {
        if !(1..self.u).contains(&x0) {
            return Err(BarwError::domain(format!(
                "start {x0} must satisfy 1 ≤ x0 < u = {}",
                self.u
            )));
        }
        let mut x = x0;
        let mut t = 0u64;
        while let Some(row) = &self.rows[x] {
            x = row.sample(rng);
            t += 1;
            visit(x);
        }
        Ok(t)
    }
}

/// One path of the chain conditioned on `T_0 < T_u^+`.
pub fn sample_conditioned_path<R: Rng + ?Sized>(
    kernel: &TiltedKernel,
    x0: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    ConditionedSampler::new(kernel)?.sample_path(x0, rng)
}
