//! Seeding scheme.
//!
//! Every random stream is derived from a base seed and a path of integers
//! (cell index, purpose tag, function index, step) by chained SplitMix64
//! mixing, and drives a ChaCha8 generator. Streams are therefore addressable:
//! adding replicates or steps never shifts the values of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream purpose tags.
pub mod purpose {
    pub const INSTANCE: u64 = 1;
    pub const CONTEXT: u64 = 2;
    pub const NOISE: u64 = 3;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Standard-normal draw for observation noise of function `fn_index` at step `t`.
pub fn noise_draw(base: u64, fn_index: usize, t: usize) -> f64 {
    let mut rng = stream(base, &[purpose::NOISE, fn_index as u64, t as u64]);
    StandardNormal.sample(&mut rng)
}
