//! Seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a user seed with a list of stream coordinates (layer index, epoch, ...).
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream(seed: u64, coords: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, coords))
}

// stream domains, so that e.g. the topology and init streams never coincide
pub const DOMAIN_TOPOLOGY: u64 = 1;
pub const DOMAIN_INIT: u64 = 2;
pub const DOMAIN_EVOLUTION: u64 = 3;
pub const DOMAIN_SPLIT: u64 = 4;
pub const DOMAIN_SHUFFLE: u64 = 5;
