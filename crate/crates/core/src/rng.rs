//! Seed derivation and the deterministic RNG used everywhere.
//!
//! Trial `k` of an experiment runs with `spec_seed ^ mix64(k)`, where
//! `mix64` is the splitmix64 finalizer. Within a trial the simulator's
//! delivery stream and the protocol's choice stream are decorrelated by
//! xoring fixed tags into the trial seed before seeding ChaCha8.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for the transport's delivery/drop decisions.
pub const SIM_STREAM: u64 = 0x5349_4d5f_5354_524d; // "SIM_STRM"
/// Stream tag for protocol randomness (ranks, probe and gossip targets).
pub const PROTOCOL_STREAM: u64 = 0x5052_4f54_4f53_524d;

/// splitmix64 avalanche finalizer.
///
/// Bijective on u64, so distinct trial indices always yield distinct seeds.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for trial `k` of an experiment configured with `spec_seed`.
pub fn trial_seed(spec_seed: u64, k: u64) -> u64 {
    spec_seed ^ mix64(k)
}

/// Deterministic RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
