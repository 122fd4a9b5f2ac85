//! Per-trial seed derivation.

pub const SALT_CHANNEL: u64 = 0x6368_616e; // "chan"
pub const SALT_RANDOM_DOF: u64 = 0x7275_6e64; // "rund"
pub const SALT_THIRD_PANEL: u64 = 0x6833_7061; // "h3pa"
pub const SALT_NOISE: u64 = 0x6e6f_6973; // "nois"
pub const SALT_VERIFY: u64 = 0x7665_7269; // "veri"

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of a run keyed by `master`, separated by `salt`.
///
/// A trial's seed depends only on its own index, so extending a run keeps the
/// earlier trials' draws.
pub fn trial_seed(master: u64, trial: u64, salt: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let h = mix(master.wrapping_add(GOLDEN));
    let h = mix(h ^ salt.wrapping_mul(GOLDEN));
    mix(h ^ trial.wrapping_add(1).wrapping_mul(GOLDEN))
}
