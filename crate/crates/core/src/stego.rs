//! Adaptive and robust embedding on top of the polar coders.
//!
//! Embedding is lossy source coding of the cover: the message (and in robust
//! mode the shared key) is frozen into `u`, the SC/SCL encoder fills the
//! remaining positions so that `y = u·G_N` stays close to the cover under the
//! embedding channels, and `y` is the stego. Adaptive extraction just inverts
//! `G_N`; robust extraction decodes the noisy stego over the attack channels
//! with the key positions frozen.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::codec::{scl_decode, CoderConfig, DecisionRule, FrozenSpec};
use crate::construction::{IndexPartition, Scheme};
use crate::transform::polar_transform;
use crate::{BitVector, ChannelBank, Error, Result};

#[derive(Debug, Clone)]
pub struct StegoContext {
    partition: IndexPartition,
    embed_bank: ChannelBank,
    attack_bank: Option<ChannelBank>,
    frozen_key: Option<BitVector>,
    coder: CoderConfig,
}

impl StegoContext {
    pub fn adaptive(
        partition: IndexPartition,
        embed_bank: ChannelBank,
        coder: CoderConfig,
    ) -> Result<Self> {
        coder.validate()?;
        if partition.scheme() != Scheme::Adaptive {
            return Err(Error::InvalidParameter("adaptive context needs an adaptive partition"));
        }
        check_len(partition.len(), embed_bank.len())?;
        Ok(Self {
            partition,
            embed_bank,
            attack_bank: None,
            frozen_key: None,
            coder,
        })
    }

    pub fn robust(
        partition: IndexPartition,
        embed_bank: ChannelBank,
        attack_bank: ChannelBank,
        frozen_key: BitVector,
        coder: CoderConfig,
    ) -> Result<Self> {
        coder.validate()?;
        if partition.scheme() != Scheme::Robust {
            return Err(Error::InvalidParameter("robust context needs a robust partition"));
        }
        check_len(partition.len(), embed_bank.len())?;
        check_len(partition.len(), attack_bank.len())?;
        check_len(partition.key().len(), frozen_key.len())?;
        Ok(Self {
            partition,
            embed_bank,
            attack_bank: Some(attack_bank),
            frozen_key: Some(frozen_key),
            coder,
        })
    }

    pub fn partition(&self) -> &IndexPartition {
        &self.partition
    }

    pub fn embed_bank(&self) -> &ChannelBank {
        &self.embed_bank
    }

    pub fn attack_bank(&self) -> Option<&ChannelBank> {
        self.attack_bank.as_ref()
    }

    pub fn frozen_key(&self) -> Option<&BitVector> {
        self.frozen_key.as_ref()
    }

    pub fn coder(&self) -> &CoderConfig {
        &self.coder
    }

    /// Message length `q`.
    pub fn payload(&self) -> usize {
        self.partition.message().len()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

fn encode(cover: &BitVector, ctx: &StegoContext, frozen: &FrozenSpec) -> Result<BitVector> {
    check_len(ctx.embed_bank.len(), cover.len())?;
    let u = scl_decode(cover, &ctx.embed_bank, frozen, &ctx.coder)?.u;
    polar_transform(&u)
}

/// Freezes the message at the message positions, lets the encoder choose the
/// rest against the cover, and returns `u·G_N`.
pub fn adaptive_embed(cover: &BitVector, message: &BitVector, ctx: &StegoContext) -> Result<BitVector> {
    if ctx.partition.scheme() != Scheme::Adaptive {
        return Err(Error::InvalidParameter("context is not adaptive"));
    }
    check_len(ctx.payload(), message.len())?;
    let frozen = FrozenSpec::new(ctx.partition.message().to_vec(), message.clone())?;
    encode(cover, ctx, &frozen)
}

/// `u = y·G_N` restricted to the message positions.
pub fn adaptive_extract(stego: &BitVector, partition: &IndexPartition) -> Result<BitVector> {
    check_len(partition.len(), stego.len())?;
    let u = polar_transform(stego)?;
    Ok(u.select(partition.message()))
}

/// Freezes the key and the message, lets the encoder choose the remaining
/// positions, and returns `u·G_N`.
pub fn robust_embed(cover: &BitVector, message: &BitVector, ctx: &StegoContext) -> Result<BitVector> {
    let key = ctx
        .frozen_key
        .as_ref()
        .ok_or(Error::MissingRobustInput("a frozen key"))?;
    check_len(ctx.payload(), message.len())?;
    let key_spec = FrozenSpec::new(ctx.partition.key().to_vec(), key.clone())?;
    let msg_spec = FrozenSpec::new(ctx.partition.message().to_vec(), message.clone())?;
    encode(cover, ctx, &key_spec.concat(&msg_spec)?)
}

/// Decodes the received stego over the attack channels with the key
/// positions frozen and returns the message positions of the estimate.
pub fn robust_extract(noisy_stego: &BitVector, ctx: &StegoContext) -> Result<BitVector> {
    let bank = ctx
        .attack_bank
        .as_ref()
        .ok_or(Error::MissingRobustInput("an attack bank"))?;
    let key = ctx
        .frozen_key
        .as_ref()
        .ok_or(Error::MissingRobustInput("a frozen key"))?;
    let frozen = FrozenSpec::new(ctx.partition.key().to_vec(), key.clone())?;
    let decoder = CoderConfig {
        rule: DecisionRule::Map,
        ..ctx.coder
    };
    let u = scl_decode(noisy_stego, bank, &frozen, &decoder)?.u;
    Ok(u.select(ctx.partition.message()))
}

/// Uniform key bits expanded from a shared secret.
pub fn derive_frozen_key(secret: u64, len: usize) -> BitVector {
    let mut rng = ChaCha20Rng::seed_from_u64(secret);
    // separate key streams from any other use of the same secret
    rng.set_stream(0x6b_65_79);
    let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.gen()).collect();
    BitVector::from_words(words, len).expect("word count matches length")
}
