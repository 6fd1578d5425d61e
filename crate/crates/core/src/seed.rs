//! Deterministic per-stream seed derivation.
//!
//! `derive_seed(base, id)` is the SplitMix64 output for state
//! `base + (id + 1)·0x9E3779B97F4A7C15` (wrapping):
//!
//! ```text
//! z = base + (id + 1) * 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! All arithmetic is modulo 2⁶⁴. The golden-ratio multiplier is odd and every
//! round of the finalizer is a bijection, so distinct ids with the same base
//! never collide.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn derive_seed(base: u64, stream_id: u64) -> u64 {
    let mut z = base.wrapping_add(stream_id.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
