//! LLR-domain SC and SCL coders over non-identical parallel BSCs.
//!
//! The same decoders serve as lossy source encoders (embedding: the cover is
//! the "observation" and the frozen values carry the message) and as channel
//! decoders (robust extraction). Only the channel LLR initialisation depends
//! on the bank; the butterfly recursion is channel-agnostic.
//!
//! Path metrics use the exact soft update `ln(1 + exp(-(1-2û)·LLR))`. With
//! the [`LlrKernel::Exact`] check-node rule the metric of a complete path is
//! `-ln P(u | y)` up to a constant, so the list decoder's winner is the
//! maximum-likelihood candidate whenever the list never prunes.

mod kernel;
mod list;
mod sc;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub use kernel::{LlrKernel, LLR_CLAMP};

use crate::transform::{bit_reverse, log2_len};
use crate::{math, BitVector, ChannelBank, Error, Result};
use kernel::{Exact, MinSum};
use list::ListDecoder;
use sc::ScDecoder;

const FREE: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DecisionRule {
    /// Most likely bit (list search when `L > 1`).
    #[default]
    Map,
    /// Sample each free bit from its posterior; single path only.
    RandomizedRounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoderConfig {
    pub list_size: usize,
    pub rule: DecisionRule,
    /// Seeds the randomized-rounding sampler. Ignored by the MAP rule.
    pub seed: u64,
    pub kernel: LlrKernel,
}

impl Default for CoderConfig {
    fn default() -> Self {
        Self {
            list_size: 16,
            rule: DecisionRule::Map,
            seed: 0,
            kernel: LlrKernel::Exact,
        }
    }
}

impl CoderConfig {
    pub fn sc() -> Self {
        Self {
            list_size: 1,
            ..Self::default()
        }
    }

    pub fn list(list_size: usize) -> Self {
        Self {
            list_size,
            ..Self::default()
        }
    }

    pub fn randomized(seed: u64) -> Self {
        Self {
            list_size: 1,
            rule: DecisionRule::RandomizedRounding,
            seed,
            kernel: LlrKernel::Exact,
        }
    }

    pub fn with_kernel(mut self, kernel: LlrKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.list_size == 0 {
            return Err(Error::InvalidParameter("list size must be at least 1"));
        }
        if self.rule == DecisionRule::RandomizedRounding && self.list_size != 1 {
            return Err(Error::InvalidParameter(
                "randomized rounding requires list size 1",
            ));
        }
        Ok(())
    }
}

/// Positions whose input bits are fixed, with their values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenSpec {
    indices: Vec<usize>,
    values: BitVector,
}

impl FrozenSpec {
    pub fn new(indices: Vec<usize>, values: BitVector) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: indices.len(),
                found: values.len(),
            });
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateIndex(w[0]));
        }
        Ok(Self { indices, values })
    }

    pub fn none() -> Self {
        Self {
            indices: Vec::new(),
            values: BitVector::zeros(0),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &BitVector {
        &self.values
    }

    /// Concatenates two disjoint specs.
    pub fn concat(&self, other: &FrozenSpec) -> Result<FrozenSpec> {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let values = BitVector::from_bools(self.values.iter().chain(other.values.iter()));
        FrozenSpec::new(indices, values)
    }

    /// Per-position mask: the frozen value, or [`FREE`].
    fn mask(&self, len: usize) -> Result<Vec<u8>> {
        let mut mask = vec![FREE; len];
        for (k, &i) in self.indices.iter().enumerate() {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            mask[i] = self.values.bit(k);
        }
        Ok(mask)
    }
}

/// Per-position LLRs `(1 - 2x_i)·ln((1 - p_i)/p_i)` of the observation,
/// clamped to [`LLR_CLAMP`]; positive means "0 more likely".
pub fn llr_init(observation: &BitVector, bank: &ChannelBank) -> Result<Vec<f64>> {
    if observation.len() != bank.len() {
        return Err(Error::LengthMismatch {
            expected: bank.len(),
            found: observation.len(),
        });
    }
    Ok(observation
        .iter()
        .zip(bank.llr_magnitude())
        .map(|(x, &m)| if x { -m } else { m })
        .collect())
}

/// Natural-domain channel LLRs: entry `j` is the LLR of position `rev(j)`.
fn natural_order(llr: &[f64]) -> Vec<f64> {
    let n = llr.len().trailing_zeros();
    (0..llr.len()).map(|j| llr[bit_reverse(j, n)]).collect()
}

/// Outcome of a decoding run.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Estimate of the full input vector `û_1^N`.
    pub u: BitVector,
    /// Path metric of the returned estimate.
    pub metric: f64,
}

fn prepare(
    observation: &BitVector,
    bank: &ChannelBank,
    frozen: &FrozenSpec,
) -> Result<(u32, Vec<f64>, Vec<u8>)> {
    let order = log2_len(observation.len())?;
    let llr = llr_init(observation, bank)?;
    let mask = frozen.mask(observation.len())?;
    Ok((order, natural_order(&llr), mask))
}

/// SCL decoding. With `list_size = 1` and the MAP rule this is plain SC.
/// Randomized rounding is dispatched to [`sc_encode_randomized`].
pub fn scl_decode(
    observation: &BitVector,
    bank: &ChannelBank,
    frozen: &FrozenSpec,
    config: &CoderConfig,
) -> Result<Decoded> {
    config.validate()?;
    if config.rule == DecisionRule::RandomizedRounding {
        let u = sc_encode_randomized_with(observation, bank, frozen, config.seed, config.kernel)?;
        // metric of the sampled path
        let metric = sc_path_metric(observation, bank, &u, config.kernel)?;
        return Ok(Decoded { u, metric });
    }
    if config.list_size == 1 {
        return sc_decode(observation, bank, frozen, config.kernel);
    }
    let (order, channel, mask) = prepare(observation, bank, frozen)?;
    let mut dec = ListDecoder::new(order, config.list_size);
    dec.load_channel(&channel);
    let out = match config.kernel {
        LlrKernel::Exact => dec.run::<Exact>(&mask),
        LlrKernel::MinSum => dec.run::<MinSum>(&mask),
    };
    Ok(Decoded {
        u: BitVector::from_bits(&out.decisions)?,
        metric: out.metric,
    })
}

/// Single-path SC with hard decisions (`û = 0` iff `LLR ≥ 0`).
pub fn sc_decode(
    observation: &BitVector,
    bank: &ChannelBank,
    frozen: &FrozenSpec,
    kernel: LlrKernel,
) -> Result<Decoded> {
    let (order, channel, mask) = prepare(observation, bank, frozen)?;
    let mut dec = ScDecoder::new(order);
    dec.load_channel(&channel);
    let decide = |i: usize, l: f64| if mask[i] != FREE { mask[i] } else { (l < 0.0) as u8 };
    match kernel {
        LlrKernel::Exact => dec.run::<Exact, _>(decide),
        LlrKernel::MinSum => dec.run::<MinSum, _>(decide),
    }
    Ok(Decoded {
        u: BitVector::from_bits(&dec.decisions)?,
        metric: dec.metric,
    })
}

/// SC encoding where each free bit is drawn from `Ber(1/(1 + exp(LLR)))`.
/// Deterministic for a given seed.
pub fn sc_encode_randomized(
    cover: &BitVector,
    bank: &ChannelBank,
    frozen: &FrozenSpec,
    seed: u64,
) -> Result<BitVector> {
    sc_encode_randomized_with(cover, bank, frozen, seed, LlrKernel::Exact)
}

fn sc_encode_randomized_with(
    cover: &BitVector,
    bank: &ChannelBank,
    frozen: &FrozenSpec,
    seed: u64,
    kernel: LlrKernel,
) -> Result<BitVector> {
    let (order, channel, mask) = prepare(cover, bank, frozen)?;
    let mut dec = ScDecoder::new(order);
    dec.load_channel(&channel);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let decide = |i: usize, l: f64| {
        if mask[i] != FREE {
            mask[i]
        } else {
            let p_one = 1.0 / (1.0 + math::exp(l));
            (rng.gen::<f64>() < p_one) as u8
        }
    };
    match kernel {
        LlrKernel::Exact => dec.run::<Exact, _>(decide),
        LlrKernel::MinSum => dec.run::<MinSum, _>(decide),
    }
    BitVector::from_bits(&dec.decisions)
}

/// Metric of a fixed input vector along the SC schedule.
pub fn sc_path_metric(
    observation: &BitVector,
    bank: &ChannelBank,
    u: &BitVector,
    kernel: LlrKernel,
) -> Result<f64> {
    let (order, channel, _) = prepare(observation, bank, &FrozenSpec::none())?;
    if u.len() != observation.len() {
        return Err(Error::LengthMismatch {
            expected: observation.len(),
            found: u.len(),
        });
    }
    let mut dec = ScDecoder::new(order);
    dec.load_channel(&channel);
    let bits = u.to_bits();
    match kernel {
        LlrKernel::Exact => dec.run::<Exact, _>(|i, _| bits[i]),
        LlrKernel::MinSum => dec.run::<MinSum, _>(|i, _| bits[i]),
    }
    Ok(dec.metric)
}

/// Reusable genie-aided SC evaluator: decodes each position with the true
/// past bits and counts first-error events per position.
pub struct GenieAidedSc {
    dec: ScDecoder,
    channel: Vec<f64>,
    kernel: LlrKernel,
}

impl GenieAidedSc {
    pub fn new(len: usize, kernel: LlrKernel) -> Result<Self> {
        let order = log2_len(len)?;
        Ok(Self {
            dec: ScDecoder::new(order),
            channel: vec![0.0; len],
            kernel,
        })
    }

    /// Decodes `received` under `bank` and adds one to `counts[i]` for every
    /// position whose hard decision differs from `u[i]`; the decision is then
    /// replaced by `u[i]` before moving on.
    pub fn accumulate(
        &mut self,
        received: &BitVector,
        bank: &ChannelBank,
        u: &BitVector,
        counts: &mut [u64],
    ) -> Result<()> {
        let len = self.channel.len();
        if received.len() != len || u.len() != len || bank.len() != len || counts.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: received.len(),
            });
        }
        let n = len.trailing_zeros();
        for (j, slot) in self.channel.iter_mut().enumerate() {
            let i = bit_reverse(j, n);
            let m = bank.llr_magnitude()[i];
            *slot = if received.get(i) { -m } else { m };
        }
        self.dec.load_channel(&self.channel);
        let decide = |i: usize, l: f64| {
            let hat = if l >= 0.0 { 0 } else { 1 };
            let truth = u.bit(i);
            if hat != truth {
                counts[i] += 1;
            }
            truth
        };
        match self.kernel {
            LlrKernel::Exact => self.dec.run::<Exact, _>(decide),
            LlrKernel::MinSum => self.dec.run::<MinSum, _>(decide),
        }
        Ok(())
    }
}
