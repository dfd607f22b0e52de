//! Seeded random streams.
//!
//! Every source of randomness in a simulation is a [`Stream`] owned by exactly
//! one consumer. Sub-streams are derived from a parent seed and a tag with
//! SplitMix64 so that the derivation is portable and order independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Creates a stream from a 64-bit seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One SplitMix64 output step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from `parent` keyed by `tag`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Uniform draw on the open interval `(0, 1)`.
///
/// Uses the top 53 bits of one `u64` and centres the value in its bucket, so
/// neither endpoint can occur. Inverse-CDF samplers rely on this.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// FNV-1a hash of a label, used to key sub-streams by policy name.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
