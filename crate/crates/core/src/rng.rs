//! Reproducible random streams for replicate-parallel Monte Carlo.
//!
//! Every replicate draws from its own ChaCha8 stream addressed by
//! `(seed, domain, replicate)`, so results do not depend on how replicates
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep samplers that share a user seed on disjoint streams.
pub mod domain {
    pub const TLD: u64 = 1;
    pub const GAMMA_SHEET: u64 = 2;
    pub const BRIDGE_SUP: u64 = 3;
    pub const SIMULATION: u64 = 4;
    pub const SAMPLE: u64 = 5;
}

/// Generator for replicate `replicate` of the sampler identified by `domain`.
pub fn stream_rng(seed: u64, domain: u64, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}
