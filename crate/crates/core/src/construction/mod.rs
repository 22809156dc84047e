//! Subchannel reliability for polarized parallel BSCs and the index
//! partitions built from it.
//!
//! Scores follow one convention for every method: larger means less
//! reliable. Bhattacharyya and degrading-merge profiles hold `Z(W_N^(i))`
//! estimates, merge-error profiles hold error probabilities of the merged
//! channels, Monte Carlo profiles hold genie-aided error counts. The
//! reliability order is the stable ascending sort of the scores, so ties go
//! to the lower index, and "the k least reliable" are the last k entries of
//! that order.

mod merge;
mod monte_carlo;

use alloc::vec;
use alloc::vec::Vec;

pub use merge::{degrading_merge_construct, degrading_merge_error_construct, DEFAULT_MERGE_ALPHABET};
pub use monte_carlo::{monte_carlo_construct, monte_carlo_counts, MonteCarloTrial};

use crate::channel::check_crossover;
use crate::optimizer::h2;
use crate::{math, ChannelBank, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstructionMethod {
    Bhattacharyya,
    /// Degrading merge with output alphabet limit `mu`.
    DegradingMerge { mu: usize },
    /// Degrading merge, ranked by error probability instead of `Z`.
    MergeErrorProbability { mu: usize },
    /// Algorithm of genie-aided SC trials.
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    method: ConstructionMethod,
    scores: Vec<f64>,
    /// Distance of each score from its useless extreme (`1 - Z`, or
    /// `1/2 - P_e`) computed without cancellation. Near-useless subchannels
    /// round to the extreme itself, and this keeps them ordered.
    complement: Option<Vec<f64>>,
}

impl ReliabilityProfile {
    /// Wraps precomputed scores. Bhattacharyya-type scores must lie in
    /// `[0, 1]`, counts in `[0, T]`.
    pub fn new(method: ConstructionMethod, scores: Vec<f64>) -> Result<Self> {
        crate::transform::log2_len(scores.len())?;
        let hi = match method {
            ConstructionMethod::MonteCarlo { trials, .. } => trials as f64,
            _ => 1.0,
        };
        for &s in &scores {
            if !(0.0..=hi).contains(&s) {
                return Err(Error::ProbabilityOutOfRange { value: s, lo: 0.0, hi });
            }
        }
        Ok(Self {
            method,
            scores,
            complement: None,
        })
    }

    /// Like [`new`](Self::new) with an accurate distance from the useless
    /// extreme per index, used to break ties between equal scores.
    pub fn with_complement(
        method: ConstructionMethod,
        scores: Vec<f64>,
        complement: Vec<f64>,
    ) -> Result<Self> {
        if complement.len() != scores.len() {
            return Err(Error::LengthMismatch {
                expected: scores.len(),
                found: complement.len(),
            });
        }
        for &c in &complement {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::ProbabilityOutOfRange { value: c, lo: 0.0, hi: 1.0 });
            }
        }
        let mut p = Self::new(method, scores)?;
        p.complement = Some(complement);
        Ok(p)
    }

    pub fn complement(&self) -> Option<&[f64]> {
        self.complement.as_deref()
    }

    pub fn method(&self) -> ConstructionMethod {
        self.method
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Indices from most to least reliable. Equal scores are ordered by
    /// descending complement when one is present, then by ascending index.
    pub fn reliability_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            let primary = self.scores[a].total_cmp(&self.scores[b]);
            match &self.complement {
                Some(c) => primary.then(c[b].total_cmp(&c[a])),
                None => primary,
            }
        });
        idx
    }

    /// The `k` least reliable indices, in ascending index order.
    pub fn least_reliable(&self, k: usize) -> Vec<usize> {
        let order = self.reliability_order();
        let mut out = order[order.len() - k.min(order.len())..].to_vec();
        out.sort_unstable();
        out
    }
}

/// `2·sqrt(p(1 - p))`.
pub fn bhattacharyya_bsc(p: f64) -> Result<f64> {
    check_crossover(p)?;
    Ok(2.0 * math::sqrt(p * (1.0 - p)))
}

/// Leaf values in the decoder's natural order: entry `j` belongs to cover
/// position `rev(j)`.
pub(crate) fn natural_leaves<T, F: FnMut(f64) -> T>(bank: &ChannelBank, mut leaf: F) -> Vec<T> {
    let n = bank.order();
    (0..bank.len())
        .map(|j| leaf(bank.crossover()[crate::transform::bit_reverse(j, n)]))
        .collect()
}

/// Applies `combine(left, right) -> (minus, plus)` over the butterfly,
/// outermost stage first.
pub(crate) fn polarize<T, F: FnMut(&T, &T) -> (T, T)>(values: &mut [T], mut combine: F) {
    let len = values.len();
    let mut m = len;
    while m >= 2 {
        let h = m / 2;
        for block in values.chunks_mut(m) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (minus, plus) = combine(a, b);
                *a = minus;
                *b = plus;
            }
        }
        m = h;
    }
}

/// Recursive Bhattacharyya estimates: `Z⁻ = Z1 + Z2 - Z1·Z2`, `Z⁺ = Z1·Z2`.
/// `1 - Z` is carried alongside: `(1 - Z1)(1 - Z2)` on the minus branch and
/// `(1 - Z1) + Z1·(1 - Z2)` on the plus branch.
pub fn polarize_bhattacharyya(bank: &ChannelBank) -> ReliabilityProfile {
    let mut z = natural_leaves(bank, |p| {
        let d = math::sqrt(1.0 - p) - math::sqrt(p);
        (2.0 * math::sqrt(p * (1.0 - p)), d * d)
    });
    polarize(&mut z, |&(a, ca), &(b, cb)| {
        (((a + b - a * b).min(1.0), ca * cb), (a * b, (ca + a * cb).min(1.0)))
    });
    let (scores, complement) = z.into_iter().unzip();
    ReliabilityProfile {
        method: ConstructionMethod::Bhattacharyya,
        scores,
        complement: Some(complement),
    }
}

/// What an index carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexRole {
    /// Frozen to the pre-shared key (robust `F`).
    Key,
    /// Frozen to the message (adaptive `F`, robust `I`).
    Message,
    /// Chosen by the SC/SCL encoder (adaptive `I`, robust `P`).
    Encoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Adaptive,
    Robust,
}

/// Disjoint split of `0..N` into key, message and encoder positions.
///
/// For the adaptive scheme the paper's `F` is [`Self::message`] and its `I`
/// is [`Self::encoder`]. For the robust scheme `F`, `I`, `P` are
/// [`Self::key`], [`Self::message`], [`Self::encoder`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPartition {
    scheme: Scheme,
    key: Vec<usize>,
    message: Vec<usize>,
    encoder: Vec<usize>,
    nesting_violation: f64,
}

impl IndexPartition {
    /// Builds a partition from per-index roles.
    pub fn from_roles(scheme: Scheme, roles: &[IndexRole]) -> Result<Self> {
        crate::transform::log2_len(roles.len())?;
        let pick = |r: IndexRole| -> Vec<usize> {
            roles
                .iter()
                .enumerate()
                .filter(|(_, &x)| x == r)
                .map(|(i, _)| i)
                .collect()
        };
        let key = pick(IndexRole::Key);
        if scheme == Scheme::Adaptive && !key.is_empty() {
            return Err(Error::InvalidParameter("adaptive partition has no key set"));
        }
        Ok(Self {
            scheme,
            key,
            message: pick(IndexRole::Message),
            encoder: pick(IndexRole::Encoder),
            nesting_violation: 0.0,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.key.len() + self.message.len() + self.encoder.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self) -> &[usize] {
        &self.key
    }

    pub fn message(&self) -> &[usize] {
        &self.message
    }

    pub fn encoder(&self) -> &[usize] {
        &self.encoder
    }

    /// `|F2 \ F1| / N` as measured when the partition was selected.
    pub fn nesting_violation(&self) -> f64 {
        self.nesting_violation
    }

    pub fn roles(&self) -> Vec<IndexRole> {
        let mut roles = vec![IndexRole::Encoder; self.len()];
        for &i in &self.key {
            roles[i] = IndexRole::Key;
        }
        for &i in &self.message {
            roles[i] = IndexRole::Message;
        }
        roles
    }
}

fn check_same_len(a: &ReliabilityProfile, b: &ReliabilityProfile) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Message positions are the `q` least reliable subchannels of `W`.
pub fn select_adaptive_partition(profile: &ReliabilityProfile, q: usize) -> Result<IndexPartition> {
    let len = profile.len();
    if q > len {
        return Err(Error::IndexOutOfRange { index: q, len });
    }
    let mut roles = vec![IndexRole::Encoder; len];
    for i in profile.least_reliable(q) {
        roles[i] = IndexRole::Message;
    }
    IndexPartition::from_roles(Scheme::Adaptive, &roles)
}

/// Cardinality-based robust partition. The key set `F2` is the `m_f` least
/// reliable subchannels of `Q`; the message set is the `q` least reliable
/// subchannels of `W` outside it. `F1 = F2 ∪ I` then contains `F2` by
/// construction. The recorded nesting violation compares `F2` with the
/// `q + m_f` least reliable subchannels of `W`.
pub fn select_robust_partition(
    profile_w: &ReliabilityProfile,
    profile_q: &ReliabilityProfile,
    q: usize,
    m_f: usize,
) -> Result<IndexPartition> {
    check_same_len(profile_w, profile_q)?;
    let len = profile_w.len();
    if q + m_f > len {
        return Err(Error::IndexOutOfRange { index: q + m_f, len });
    }
    let mut roles = vec![IndexRole::Encoder; len];
    for i in profile_q.least_reliable(m_f) {
        roles[i] = IndexRole::Key;
    }
    let mut taken = 0;
    for &i in profile_w.reliability_order().iter().rev() {
        if taken == q {
            break;
        }
        if roles[i] == IndexRole::Encoder {
            roles[i] = IndexRole::Message;
            taken += 1;
        }
    }
    let mut in_f1 = vec![false; len];
    for i in profile_w.least_reliable(q + m_f) {
        in_f1[i] = true;
    }
    let outside = roles
        .iter()
        .zip(&in_f1)
        .filter(|(&r, &f1)| r == IndexRole::Key && !f1)
        .count();
    let mut part = IndexPartition::from_roles(Scheme::Robust, &roles)?;
    part.nesting_violation = outside as f64 / len as f64;
    Ok(part)
}

/// Threshold-mode robust partition:
/// `F1 = {i : score_W(i) ≥ w_threshold}`, `F2 = {i : score_Q(i) ≥ q_threshold}`.
/// Indices of `F2 \ F1` are moved into the key set (repair), so the key set
/// is all of `F2`, the message set is `F1 \ F2` and the rest is encoder-chosen.
pub fn select_robust_partition_threshold(
    profile_w: &ReliabilityProfile,
    profile_q: &ReliabilityProfile,
    w_threshold: f64,
    q_threshold: f64,
) -> Result<IndexPartition> {
    check_same_len(profile_w, profile_q)?;
    let len = profile_w.len();
    let mut outside = 0usize;
    let roles: Vec<IndexRole> = (0..len)
        .map(|i| {
            let f1 = profile_w.scores[i] >= w_threshold;
            let f2 = profile_q.scores[i] >= q_threshold;
            if f2 && !f1 {
                outside += 1;
            }
            match (f1, f2) {
                (_, true) => IndexRole::Key,
                (true, false) => IndexRole::Message,
                (false, false) => IndexRole::Encoder,
            }
        })
        .collect();
    let mut part = IndexPartition::from_roles(Scheme::Robust, &roles)?;
    part.nesting_violation = outside as f64 / len as f64;
    Ok(part)
}

/// Default rate margin for the key set.
pub const DEFAULT_KEY_MARGIN: f64 = 0.02;

/// Key set size `⌈Σ h2(θ_i)⌉ + ⌈δ·N⌉`, capped at `N`.
pub fn key_set_size(theta: &[f64], margin: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&margin) {
        return Err(Error::InvalidParameter("key margin must lie in [0, 1]"));
    }
    let mut entropy = Vec::with_capacity(theta.len());
    for &t in theta {
        check_crossover(t)?;
        entropy.push(h2(t)?);
    }
    // guard against the sum landing a hair above an integer
    let total = math::compensated_sum(entropy);
    let base = math::ceil(total - 1e-9).max(0.0) as usize;
    let extra = math::ceil(margin * theta.len() as f64 - 1e-9).max(0.0) as usize;
    Ok((base + extra).min(theta.len()))
}
