//! Deterministic random streams.
//!
//! Every random draw in the engine comes from a [`ChaCha8Rng`] seeded from a
//! tuple of integers, so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a tuple of seed components.
pub fn derive_seed(components: &[u64]) -> u64 {
    components
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng_from(components: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(components))
}

/// Stream for one record: `hash(global_seed, epoch, index)`.
pub fn sample_rng(global_seed: u64, epoch: u64, index: u64) -> Rng {
    rng_from(&[global_seed, epoch, index])
}

/// 64-bit FNV-1a, used for stable identifiers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
