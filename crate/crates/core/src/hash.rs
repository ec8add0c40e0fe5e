//! Keyed 64-bit mixing function standing in for the random oracle `Hash(·)`.
//!
//! The output is a pure function of `(seed, level, value)`. Callers keep the
//! three hash families apart through disjoint `level` ranges:
//!
//! | family            | level            |
//! |-------------------|------------------|
//! | Phase I prefixes  | `ℓ`              |
//! | Phase II rows     | `log2 n + ℓ`     |
//! | DD rows           | `2·log2 n + ℓ`   |
//! | per-trial seeds   | [`TRIAL_LEVEL`]  |

/// Weyl increment shared with SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const VALUE_MULTIPLIER: u64 = 0xD1B5_4A32_D192_ED03;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// Level used to derive independent per-trial seeds from a run seed.
pub const TRIAL_LEVEL: u32 = 63;

#[inline]
pub fn hash64(seed: u64, level: u32, value: u64) -> u64 {
    let word = seed
        ^ u64::from(level).wrapping_mul(GOLDEN_GAMMA).rotate_left(17)
        ^ value.wrapping_mul(VALUE_MULTIPLIER);
    let mut z = word.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// Level offset of the Phase II (leaf-trim) rows.
#[inline]
pub fn phase2_level(log2n: u32, row: u32) -> u32 {
    log2n + row
}

/// Level offset of the DD finisher rows.
#[inline]
pub fn dd_level(log2n: u32, row: u32) -> u32 {
    2 * log2n + row
}
