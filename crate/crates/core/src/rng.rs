//! Seed threading.
//!
//! All randomness flows from an explicit `u64` seed. Per-point draws use a
//! ChaCha8 stream selected by the point index so that any partition of the
//! index range across threads produces the same values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SameRng = ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SameRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a tag into a seed (splitmix64 finaliser) to obtain an independent
/// child seed, e.g. one for sampling and one for noise.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const TAG_SAMPLE: u64 = 0x7361_6d70_6c65;
pub(crate) const TAG_NOISE: u64 = 0x6e6f_6973_65;
pub(crate) const TAG_SPLIT: u64 = 0x7370_6c69_74;
pub(crate) const TAG_PAIRS: u64 = 0x7061_6972_73;
