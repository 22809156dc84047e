//! Monte Carlo construction with genie-aided SC.
//!
//! Each trial draws a uniform input `u`, encodes it, passes the codeword
//! through the bank and runs SC where every decision is checked against
//! `u`, counted if wrong, and then replaced by the true bit. Trial `t` uses
//! its own ChaCha stream derived from `(seed, t)`, so counts over any split
//! of the trial range add up to the same totals.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConstructionMethod, IndexPartition, IndexRole, ReliabilityProfile, Scheme};
use crate::codec::{GenieAidedSc, LlrKernel};
use crate::transform::polar_transform_in_place;
use crate::{BitVector, ChannelBank, Error, Result};

/// Scratch buffers for running trials one at a time.
pub struct MonteCarloTrial {
    genie: GenieAidedSc,
    u: BitVector,
    x: BitVector,
}

impl MonteCarloTrial {
    pub fn new(len: usize, kernel: LlrKernel) -> Result<Self> {
        Ok(Self {
            genie: GenieAidedSc::new(len, kernel)?,
            u: BitVector::zeros(len),
            x: BitVector::zeros(len),
        })
    }

    /// Runs trial `trial` of the experiment seeded with `seed`.
    pub fn run(
        &mut self,
        bank: &ChannelBank,
        seed: u64,
        trial: u64,
        counts: &mut [u64],
    ) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let len = bank.len();
        for i in 0..len {
            self.u.set(i, rng.gen::<bool>());
        }
        self.x.clone_from(&self.u);
        polar_transform_in_place(&mut self.x)?;
        for (i, &p) in bank.crossover().iter().enumerate() {
            if rng.gen::<f64>() < p {
                self.x.set(i, !self.x.get(i));
            }
        }
        self.genie.accumulate(&self.x, bank, &self.u, counts)
    }
}

/// Per-position first-error counts over the trials in `trials`.
pub fn monte_carlo_counts(
    bank: &ChannelBank,
    trials: Range<u64>,
    seed: u64,
    kernel: LlrKernel,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; bank.len()];
    let mut runner = MonteCarloTrial::new(bank.len(), kernel)?;
    for t in trials {
        runner.run(bank, seed, t, &mut counts)?;
    }
    Ok(counts)
}

/// Runs `trials` genie-aided trials and returns the error-count profile with
/// the split `A` (the `k` smallest counts, ties to the lower index) as
/// encoder positions and `Aᶜ` as message positions.
pub fn monte_carlo_construct(
    bank: &ChannelBank,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<(ReliabilityProfile, IndexPartition)> {
    let len = bank.len();
    if k > len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    let counts = monte_carlo_counts(bank, 0..trials, seed, LlrKernel::Exact)?;
    let profile = ReliabilityProfile::new(
        ConstructionMethod::MonteCarlo { trials, seed },
        counts.iter().map(|&c| c as f64).collect(),
    )?;
    let mut roles = vec![IndexRole::Message; len];
    for &i in &profile.reliability_order()[..k] {
        roles[i] = IndexRole::Encoder;
    }
    let part = IndexPartition::from_roles(Scheme::Adaptive, &roles)?;
    Ok((profile, part))
}
