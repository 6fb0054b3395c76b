//! Seed derivation and portable random streams.
//!
//! Every stochastic routine draws from [`ChaCha20Rng`], whose output is fixed
//! across platforms. Independent work items (parents in the noise model, raw
//! keys in recovery) use `stream(seed, index)`: the same 64-bit seed with the
//! ChaCha stream id set to the item index. Derived scalar seeds (batches,
//! recovery iterations, geometries) come from [`derive_seed`], a SplitMix64
//! mix of the parent seed and the child index.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Generator seeded with `seed`.
pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the generator seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
