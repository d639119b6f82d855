//! Deterministic derivation of sub-seeds from one master seed.
//!
//! Sub-seeds are formed by hashing `(parent, stream)` through the SplitMix64
//! finalizer, so scenario `s` chain `c` uses
//! `derive(derive(master, s), c)` regardless of scheduling.

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `stream` of `parent`.
pub fn derive(parent: u64, stream: u64) -> u64 {
    mix(parent ^ mix(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}
