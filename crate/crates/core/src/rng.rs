//! Seeded randomness. Every random draw in the crate goes through [`seeded`]
//! or [`derived`], so results are reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn derived(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A `u64` seed for sub-task `stream`, drawn from an independent stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    use rand::Rng as _;
    derived(seed, stream).random()
}
