//! Check-node update rules for the LLR recursion.

use crate::math;

/// Channel LLR magnitudes are clamped to this value (natural-log units).
/// A zero crossover probability maps to the clamp, which stands for
/// "bit known exactly".
pub const LLR_CLAMP: f64 = 40.0;

/// Which check-node rule the decoders use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LlrKernel {
    /// `2·atanh(tanh(a/2)·tanh(b/2))`, evaluated in a numerically stable form.
    /// Path metrics are then exact posterior log-probabilities.
    #[default]
    Exact,
    /// `sign(a)·sign(b)·min(|a|,|b|)`.
    MinSum,
}

pub(crate) trait CheckNode {
    fn check(a: f64, b: f64) -> f64;
}

pub(crate) struct Exact;
pub(crate) struct MinSum;

/// `ln(1 + exp(-z))` for `z ≥ 0`, taken as zero once it drops below `2e-22`.
#[inline(always)]
fn log1p_exp_neg(z: f64) -> f64 {
    if z > 50.0 {
        0.0
    } else {
        math::ln_1p(math::exp(-z))
    }
}

impl CheckNode for Exact {
    #[inline(always)]
    fn check(a: f64, b: f64) -> f64 {
        let (x, y) = (a.abs(), b.abs());
        let m = x.min(y);
        let corr = log1p_exp_neg(x + y) - log1p_exp_neg((x - y).abs());
        let mag = m + corr;
        if (a < 0.0) != (b < 0.0) {
            -mag
        } else {
            mag
        }
    }
}

const SIGN: u64 = 1 << 63;

impl CheckNode for MinSum {
    #[inline(always)]
    fn check(a: f64, b: f64) -> f64 {
        // branch-free so the layer loops vectorize
        let m = a.abs().min(b.abs());
        f64::from_bits(m.to_bits() | ((a.to_bits() ^ b.to_bits()) & SIGN))
    }
}

/// Variable-node update given the already-decided partner bit.
#[inline(always)]
pub(crate) fn combine(a: f64, b: f64, left_bit: u8) -> f64 {
    b + f64::from_bits(a.to_bits() ^ ((left_bit as u64) << 63))
}

/// Path-metric increment `ln(1 + exp(-(1-2u)·llr))`, i.e. `-ln P(u)` under the
/// LLR. Zero when the decision follows the LLR with infinite confidence.
#[inline(always)]
pub(crate) fn penalty(llr: f64, bit: u8) -> f64 {
    if bit == 0 {
        math::softplus(-llr)
    } else {
        math::softplus(llr)
    }
}
