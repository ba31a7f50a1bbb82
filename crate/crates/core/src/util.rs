//! Small internal helpers shared across modules.

/// Stable 64-bit FNV-1a hash of a string, mixed with a seed.
///
/// Used to derive per-item RNG streams that do not depend on iteration order
/// or on `std`'s randomized hasher. Stable across platforms and builds.
pub(crate) fn stable_hash(seed: u64, s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // Final avalanche so nearby seeds give unrelated streams.
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}
