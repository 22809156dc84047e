//! Banks of parallel binary symmetric channels.

use alloc::vec;
use alloc::vec::Vec;

use crate::codec::LLR_CLAMP;
use crate::{math, transform, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelRole {
    /// Models the sender's per-position modification law, `W_i = BSC(p_i)`.
    Embedding,
    /// Models noise between sender and receiver, `Q_i = BSC(θ_i)`.
    Attack,
}

/// `N = 2^n` independent BSCs, one per cover position.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBank {
    crossover: Vec<f64>,
    /// `ln((1 - p_i)/p_i)` clamped to [`LLR_CLAMP`].
    llr_magnitude: Vec<f64>,
    role: ChannelRole,
}

pub(crate) fn check_crossover(p: f64) -> Result<()> {
    if (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            value: p,
            lo: 0.0,
            hi: 0.5,
        })
    }
}

impl ChannelBank {
    pub fn new(crossover: Vec<f64>, role: ChannelRole) -> Result<Self> {
        transform::log2_len(crossover.len())?;
        for &p in &crossover {
            check_crossover(p)?;
        }
        let llr_magnitude = crossover
            .iter()
            .map(|&p| {
                if p <= 0.0 {
                    LLR_CLAMP
                } else {
                    math::ln((1.0 - p) / p).min(LLR_CLAMP)
                }
            })
            .collect();
        Ok(Self {
            crossover,
            llr_magnitude,
            role,
        })
    }

    pub fn constant(len: usize, p: f64, role: ChannelRole) -> Result<Self> {
        Self::new(vec![p; len], role)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.crossover.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.crossover.is_empty()
    }

    #[inline]
    pub fn crossover(&self) -> &[f64] {
        &self.crossover
    }

    #[inline]
    pub(crate) fn llr_magnitude(&self) -> &[f64] {
        &self.llr_magnitude
    }

    #[inline]
    pub fn role(&self) -> ChannelRole {
        self.role
    }

    /// `log2(N)`.
    pub fn order(&self) -> u32 {
        self.crossover.len().trailing_zeros()
    }
}
