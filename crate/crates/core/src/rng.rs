//! Seed derivation.
//!
//! Every random draw in the crate goes through a ChaCha8 stream seeded from
//! a base seed plus a list of labels, so that a grid cell's randomness never
//! depends on which other cells ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `parts` into `seed`. Order matters.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, parts: &[u64]) -> Rng {
    rng(derive(seed, parts))
}

/// Stable tag for a float-valued grid coordinate.
pub fn tag_f64(x: f64) -> u64 {
    x.to_bits()
}
