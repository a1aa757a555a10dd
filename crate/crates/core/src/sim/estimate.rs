use rayon::prelude::*;

use crate::chain::{binomial_logpmf, ModelParams};
use crate::error::{BarwError, Result};
use crate::solver::TiltedKernel;

use super::graph::GraphSpec;
use super::meanfield::{run_outcome, step_meanfield, ConditionedSampler, Outcome};
use super::particle::{step_particle, Offspring, ParticleState};
use super::rng::trial_stream;

/// Per-trial step limit for unconditioned runs.
pub const STEP_CAP: u64 = 10_000_000;

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Thread count for a batch of trials. `None` uses the ambient rayon pool.
///
/// Results never depend on this setting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Workers(pub Option<usize>);

/// Runs `f(trial)` for every trial index and returns results in index order.
pub fn run_trials<T, F>(trials: u64, workers: Workers, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let job = || (0..trials).into_par_iter().map(&f).collect::<Vec<T>>();
    match workers.0 {
        None => Ok(job()),
        Some(0) => Err(BarwError::domain("worker count must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| BarwError::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(BarwError::domain("trials must be at least 1"));
    }
    Ok(())
}

/// Fraction of runs from `x0` that die before reaching `u`.
pub fn estimate_hitting_prob(
    params: &ModelParams,
    u: usize,
    x0: usize,
    trials: u64,
    seed: u64,
    workers: Workers,
) -> Result<EstimateWithCI> {
    check_trials(trials)?;
    if x0 >= u {
        return Err(BarwError::domain(format!(
            "start {x0} must lie below u = {u}"
        )));
    }
    params.check_state(x0)?;
    let outcomes = run_trials(trials, workers, |i| {
        run_outcome(params, x0, Some(u), STEP_CAP, &mut trial_stream(seed, i))
    })?;
    let mut hits = 0u64;
    for (i, (outcome, steps)) in outcomes.into_iter().enumerate() {
        match outcome {
            Outcome::Absorbed => hits += 1,
            Outcome::Crossed => {}
            Outcome::Truncated => {
                return Err(BarwError::Truncated {
                    trial: i as u64,
                    steps,
                })
            }
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(EstimateWithCI {
        mean: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        seed,
    })
}

/// Mean number of steps to extinction of the conditioned chain from `x0`.
pub fn estimate_conditioned_time(
    kernel: &TiltedKernel,
    x0: usize,
    trials: u64,
    seed: u64,
    workers: Workers,
) -> Result<EstimateWithCI> {
    check_trials(trials)?;
    let sampler = ConditionedSampler::new(kernel)?;
    let lengths = run_trials(trials, workers, |i| {
        sampler.path_length(x0, &mut trial_stream(seed, i))
    })?
    .into_iter()
    .collect::<Result<Vec<u64>>>()?;
    Ok(mean_and_error(
        lengths.iter().map(|&l| l as f64),
        trials,
        seed,
    ))
}

fn mean_and_error(
    values: impl Iterator<Item = f64> + Clone,
    trials: u64,
    seed: u64,
) -> EstimateWithCI {
    let n = trials as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if trials > 1 {
        values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    EstimateWithCI {
        mean,
        std_error: (var / n).sqrt(),
        trials,
        seed,
    }
}

/// Histogram over `{0, …, n}` of one mean-field step from `x`.
pub fn meanfield_step_histogram(
    params: &ModelParams,
    x: usize,
    trials: u64,
    seed: u64,
    workers: Workers,
) -> Result<Vec<u64>> {
    check_trials(trials)?;
    params.check_state(x)?;
    let draws = run_trials(trials, workers, |i| {
        step_meanfield(params, x, &mut trial_stream(seed, i))
    })?;
    Ok(histogram(draws, params.n()))
}

/// Histogram over `{0, …, |V|}` of the occupied count after one particle
/// step from the first `x` vertices occupied.
pub fn particle_step_histogram(
    graph: &GraphSpec,
    lambda: f64,
    x: usize,
    trials: u64,
    seed: u64,
    workers: Workers,
) -> Result<Vec<u64>> {
    check_trials(trials)?;
    let nv = graph.vertex_count();
    if x > nv {
        return Err(BarwError::domain(format!(
            "cannot occupy {x} of {nv} vertices"
        )));
    }
    let offspring = Offspring::new(lambda)?;
    let start = ParticleState::from_vertices(nv, &(0..x).collect::<Vec<_>>())?;
    let draws = run_trials(trials, workers, |i| {
        step_particle(graph, &start, &offspring, &mut trial_stream(seed, i)).count()
    })?;
    Ok(histogram(draws, nv))
}

fn histogram(draws: Vec<usize>, max: usize) -> Vec<u64> {
    let mut hist = vec![0u64; max + 1];
    for d in draws {
        hist[d] += 1;
    }
    hist
}

/// Total-variation distance between an empirical histogram and a pmf.
pub fn total_variation(hist: &[u64], pmf: &[f64]) -> f64 {
    let total: u64 = hist.iter().sum();
    let len = hist.len().max(pmf.len());
    (0..len)
        .map(|k| {
            let e = hist.get(k).map_or(0.0, |&c| c as f64 / total as f64);
            (e - pmf.get(k).copied().unwrap_or(0.0)).abs()
        })
        .sum::<f64>()
        / 2.0
}

/// Exact one-step pmf `Bin(n, b(x))`.
pub fn meanfield_step_pmf(params: &ModelParams, x: usize) -> Vec<f64> {
    let b = params.b(x);
    (0..=params.n())
        .map(|y| binomial_logpmf(params.n(), b, y).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(lambda, n).unwrap()
    }

    #[test]
    fn start_at_zero() {
        let e = estimate_hitting_prob(&mp(2.0, 50), 10, 0, 100, 1, Workers::default()).unwrap();
        assert_eq!((e.mean, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let params = mp(2.0, 50);
        assert!(estimate_hitting_prob(&params, 10, 10, 100, 1, Workers::default()).is_err());
        assert!(estimate_hitting_prob(&params, 10, 3, 0, 1, Workers::default()).is_err());
        assert!(estimate_hitting_prob(&params, 10, 3, 10, 1, Workers(Some(0))).is_err());
    }

    #[test]
    fn worker_count_does_not_matter() {
        let params = mp(2.0, 50);
        let runs: Vec<_> = [None, Some(1), Some(3)]
            .into_iter()
            .map(|w| estimate_hitting_prob(&params, 10, 3, 5000, 42, Workers(w)).unwrap())
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[1], runs[2]);
        let g = GraphSpec::complete(30, true).unwrap();
        let h1 = particle_step_histogram(&g, 2.0, 10, 3000, 9, Workers(Some(1))).unwrap();
        let h4 = particle_step_histogram(&g, 2.0, 10, 3000, 9, Workers(Some(4))).unwrap();
        assert_eq!(h1, h4);
    }

    #[test]
    fn tv_distance_basics() {
        assert_eq!(total_variation(&[1, 1], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[2, 0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((total_variation(&[1], &[0.5, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn meanfield_histogram_matches_binomial() {
        let params = mp(2.0, 50);
        let hist = meanfield_step_histogram(&params, 10, 200_000, 3, Workers::default()).unwrap();
        assert!(total_variation(&hist, &meanfield_step_pmf(&params, 10)) <= 0.01);
    }
}
