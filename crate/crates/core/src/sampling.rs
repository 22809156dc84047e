//! Seeded cover and noise generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::check_crossover;
use crate::{BitVector, Result};

/// The generator used for all seeded sampling in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` in an experiment seeded with `base`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Derives an independent sub-seed for a named purpose within a trial.
pub fn sub_seed(seed: u64, purpose: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(purpose ^ 0x5eed)))
}

/// `len` i.i.d. uniform bits.
pub fn sample_bss(len: usize, seed: u64) -> BitVector {
    let mut rng = rng_from_seed(seed);
    let words = (0..len.div_ceil(64)).map(|_| rng.gen::<u64>()).collect();
    BitVector::from_words(words, len).expect("word count matches length")
}

/// Independent `Ber(θ_i)` noise, to be XORed onto the stego.
pub fn sample_attack(theta: &[f64], seed: u64) -> Result<BitVector> {
    for &t in theta {
        check_crossover(t)?;
    }
    let mut rng = rng_from_seed(seed);
    Ok(BitVector::from_bools(
        theta.iter().map(|&t| rng.gen::<f64>() < t),
    ))
}
