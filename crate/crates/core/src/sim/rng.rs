use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulated trial.
pub type TrialRng = ChaCha8Rng;

/// Independent stream for trial `trial` under `seed`.
///
/// ChaCha is counter-based: the stream is a pure function of `(seed, trial)`,
/// so results do not depend on which worker runs which trial.
pub fn trial_stream(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
