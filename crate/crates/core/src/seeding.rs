//! Deterministic seed derivation for parallel Monte-Carlo trials.
//!
//! Every trial draws its own generator from `derive_seed(base, index)`, so
//! aggregates are bit-identical regardless of execution order or thread
//! count.

/// Derives an independent per-trial seed from a base seed and a trial index
/// (splitmix64 finalizer over the combined state).
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
