//! Stage seeding.
//!
//! Every command derives its randomness from `root_seed` and a stage
//! label (e.g. `"train-lf/b1e-7_d4e-2_t1e0"`): the label is FNV-1a
//! hashed, XORed into the root, and mixed through one SplitMix64 round.
//! Stages therefore re-run independently — changing the simulate seed
//! path never shifts the training seed — while everything remains a pure
//! function of the config.

pub fn stage_seed(root_seed: u64, stage: &str) -> u64 {
    splitmix64(root_seed ^ fnv1a(stage.as_bytes()))
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
