//! Seed derivation shared by every randomized component.
//!
//! All stochastic pieces of a run (splits, landmark subsampling, fold
//! assignment, heuristic sampling) draw from `ChaCha8Rng` instances whose
//! seeds are pure functions of a master seed and a context tag. Runs are
//! therefore reproducible bit-for-bit regardless of scheduling.

/// FNV-1a mix of a base seed with context words.
///
/// Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x1000_0000_01b3;
    let mut h = OFFSET;
    for &word in std::iter::once(&base).chain(parts) {
        for byte in word.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// Context tags for [`mix_seed`], one per randomized subsystem.
pub mod tags {
    pub const SPLIT: u64 = 0x5350;
    pub const FOLDS: u64 = 0x464f;
    pub const LANDMARKS: u64 = 0x4c41;
    pub const CLASSIFIER: u64 = 0x434c;
    pub const EXPLORE: u64 = 0x4558;
    pub const SYNTH: u64 = 0x5359;
}
