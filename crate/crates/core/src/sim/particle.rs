use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{BarwError, Result};

use super::graph::GraphSpec;

/// Occupied vertex set `B_t` at time `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParticleState {
    pub occupied: Vec<bool>,
    pub time: u64,
}

impl ParticleState {
    /// State at time 0 with the listed vertices occupied.
    pub fn from_vertices(vertex_count: usize, vertices: &[usize]) -> Result<Self> {
        let mut occupied = vec![false; vertex_count];
        for &v in vertices {
            if v >= vertex_count {
                return Err(BarwError::domain(format!(
                    "vertex {v} outside 0..{vertex_count}"
                )));
            }
            occupied[v] = true;
        }
        Ok(ParticleState { occupied, time: 0 })
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occupied.contains(&true)
    }
}

/// Poisson(λ) offspring law shared across steps.
#[derive(Clone, Copy, Debug)]
pub struct Offspring(Poisson<f64>);

impl Offspring {
    pub fn new(lambda: f64) -> Result<Self> {
        Poisson::new(lambda)
            .map(Offspring)
            .map_err(|e| BarwError::domain(format!("offspring mean {lambda}: {e}")))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.0.sample(rng) as u64
    }
}

/// One BARW step: each occupied vertex sends a Poisson number of offspring
/// to uniform legal targets, and a vertex stays occupied iff exactly one
/// offspring lands on it.
pub fn step_particle<R: Rng + ?Sized>(
    graph: &GraphSpec,
    state: &ParticleState,
    offspring: &Offspring,
    rng: &mut R,
) -> ParticleState {
    assert_eq!(
        state.occupied.len(),
        graph.vertex_count(),
        "state does not fit graph"
    );
    // 0, 1, or 2 meaning "two or more".
    let mut arrivals = vec![0u8; graph.vertex_count()];
    for (v, _) in state.occupied.iter().enumerate().filter(|(_, &o)| o) {
        let targets = graph.targets(v);
        for _ in 0..offspring.sample(rng) {
            let t = targets[rng.random_range(0..targets.len())];
            arrivals[t] = (arrivals[t] + 1).min(2);
        }
    }
    ParticleState {
        occupied: arrivals.into_iter().map(|a| a == 1).collect(),
        time: state.time + 1,
    }
}
