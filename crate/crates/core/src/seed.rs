//! Seed derivation. Every random stream in a sweep is keyed by a tuple of
//! integers, so any trial can be replayed in isolation.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a key tuple.
pub fn mix(keys: &[u64]) -> u64 {
    keys.iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &k| splitmix64(h ^ splitmix64(k)))
}

/// Seed of one Monte Carlo trial.
pub fn trial_seed(master: u64, swept_value: u64, trial: u64) -> u64 {
    mix(&[master, swept_value, trial])
}
