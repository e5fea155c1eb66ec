//! Per-trial random substreams.
//!
//! Every trial draws from its own ChaCha8 stream selected by
//! `(master_seed, trial_index)`, so results do not depend on which thread ran
//! the trial or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Generator for trial `trial_index` of an experiment seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}
