//! Seeded, portable randomness.
//!
//! Every random stream in the crate is derived from one root seed plus a
//! purpose label (`"split/shuffle"`, `"fold/2/member/7"`, ...). Derivation is
//! a pure function of `(seed, label)`, so adding a new consumer never shifts
//! the stream of an existing one.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

/// Generator used throughout the crate: 64-bit state, identical output on
/// every platform.
pub type Rng = SplitMix64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` for the given purpose label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    mix64(seed ^ mix64(fnv1a(label.as_bytes()).wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Generator for the stream named `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, label))
}

/// Stable 64-bit hash of an arbitrary byte string, used for fingerprints.
pub(crate) fn fingerprint(bytes: &[u8]) -> u64 {
    mix64(fnv1a(bytes))
}
