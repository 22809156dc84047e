//! Degrading-merge construction for parallel BSCs.
//!
//! A binary memoryless symmetric channel is stored as conjugate symbol pairs
//! `(a, b)` with `a = W(y|0) = W(ȳ|1) ≥ b = W(y|1) = W(ȳ|0)`, so a BSC(p) is
//! the single pair `(1-p, p)`. After every polarization step the alphabet is
//! shrunk back to `mu/2` pairs by repeatedly merging the two neighbours (in
//! likelihood-ratio order) whose merge loses the least capacity. Merging
//! degrades the channel, so the resulting `Z` values are upper bounds.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{natural_leaves, polarize, ConstructionMethod, ReliabilityProfile};
use crate::{math, ChannelBank, Error, Result};

pub const DEFAULT_MERGE_ALPHABET: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Pair {
    pub(crate) a: f64,
    pub(crate) b: f64,
}

impl Pair {
    pub(crate) fn new(x: f64, y: f64) -> Self {
        if x >= y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }

    fn bhattacharyya(&self) -> f64 {
        2.0 * math::sqrt(self.a * self.b)
    }

    /// `1 - 2·sqrt(a·b)` for a pair of total mass `a + b`.
    fn bhattacharyya_complement(&self) -> f64 {
        let d = math::sqrt(self.a) - math::sqrt(self.b);
        d * d
    }

    /// MAP error probability contributed by the pair.
    fn error_probability(&self) -> f64 {
        self.a.min(self.b)
    }

    /// `(a + b)/2 - min(a, b)`.
    fn error_margin(&self) -> f64 {
        (self.a - self.b).abs() / 2.0
    }

    fn capacity(&self) -> f64 {
        let s = self.a + self.b;
        let term = |x: f64| if x > 0.0 { x * math::log2(2.0 * x / s) } else { 0.0 };
        term(self.a) + term(self.b)
    }

    /// Likelihood ratio `a/b`, infinite for `b = 0`.
    fn ratio(&self) -> f64 {
        if self.b > 0.0 {
            self.a / self.b
        } else {
            f64::INFINITY
        }
    }
}

pub(crate) type Bms = Vec<Pair>;

pub(crate) fn bms_bhattacharyya(w: &Bms) -> f64 {
    math::compensated_sum(w.iter().map(Pair::bhattacharyya)).min(1.0)
}

pub(crate) fn bms_bhattacharyya_complement(w: &Bms) -> f64 {
    math::compensated_sum(w.iter().map(Pair::bhattacharyya_complement)).min(1.0)
}

pub(crate) fn bms_error_probability(w: &Bms) -> f64 {
    math::compensated_sum(w.iter().map(Pair::error_probability)).min(0.5)
}

pub(crate) fn bms_error_margin(w: &Bms) -> f64 {
    math::compensated_sum(w.iter().map(Pair::error_margin)).min(0.5)
}

#[cfg(test)]
pub(crate) fn bms_capacity(w: &Bms) -> f64 {
    math::compensated_sum(w.iter().map(Pair::capacity))
}

pub(crate) fn minus(w1: &Bms, w2: &Bms) -> Bms {
    let mut out = Vec::with_capacity(w1.len() * w2.len());
    for p in w1 {
        for q in w2 {
            out.push(Pair::new(p.a * q.a + p.b * q.b, p.a * q.b + p.b * q.a));
        }
    }
    out
}

pub(crate) fn plus(w1: &Bms, w2: &Bms) -> Bms {
    let mut out = Vec::with_capacity(2 * w1.len() * w2.len());
    for p in w1 {
        for q in w2 {
            out.push(Pair::new(p.a * q.a, p.b * q.b));
            out.push(Pair::new(p.a * q.b, p.b * q.a));
        }
    }
    out
}

struct Candidate {
    loss: f64,
    left: usize,
    stamp: (u32, u32),
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // min-heap on (loss, left)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .loss
            .total_cmp(&self.loss)
            .then(other.left.cmp(&self.left))
    }
}

fn merge_loss(x: &Pair, y: &Pair) -> f64 {
    let merged = Pair::new(x.a + y.a, x.b + y.b);
    (x.capacity() + y.capacity() - merged.capacity()).max(0.0)
}

/// Merges adjacent pairs until at most `max_pairs` remain.
pub(crate) fn reduce(mut w: Bms, max_pairs: usize) -> Bms {
    w.retain(|p| p.a + p.b > 0.0);
    if w.len() <= max_pairs {
        return w;
    }
    w.sort_by(|x, y| y.ratio().total_cmp(&x.ratio()));
    let n = w.len();
    let mut next: Vec<usize> = (1..=n).collect();
    let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
    let mut version = vec![0u32; n];
    let mut alive = vec![true; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for i in 0..n - 1 {
        heap.push(Candidate {
            loss: merge_loss(&w[i], &w[i + 1]),
            left: i,
            stamp: (0, 0),
        });
    }
    let mut count = n;
    while count > max_pairs {
        let Some(c) = heap.pop() else { break };
        let i = c.left;
        if !alive[i] {
            continue;
        }
        let j = next[i];
        if j >= n || c.stamp != (version[i], version[j]) {
            continue;
        }
        // fold j into i
        w[i] = Pair::new(w[i].a + w[j].a, w[i].b + w[j].b);
        alive[j] = false;
        version[i] += 1;
        let k = next[j];
        next[i] = k;
        if k < n {
            prev[k] = i;
            heap.push(Candidate {
                loss: merge_loss(&w[i], &w[k]),
                left: i,
                stamp: (version[i], version[k]),
            });
        }
        let h = prev[i];
        if h < n {
            heap.push(Candidate {
                loss: merge_loss(&w[h], &w[i]),
                left: h,
                stamp: (version[h], version[i]),
            });
        }
        count -= 1;
    }
    w.into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(p, _)| p)
        .collect()
}

fn merged_channels(bank: &ChannelBank, mu: usize) -> Result<Vec<Bms>> {
    if mu < 2 || mu % 2 != 0 {
        return Err(Error::InvalidParameter("merge alphabet must be even and at least 2"));
    }
    let max_pairs = mu / 2;
    let mut ch: Vec<Bms> = natural_leaves(bank, |p| vec![Pair::new(1.0 - p, p)]);
    polarize(&mut ch, |w1, w2| {
        (reduce(minus(w1, w2), max_pairs), reduce(plus(w1, w2), max_pairs))
    });
    Ok(ch)
}

/// Tracks each subchannel as a finite-alphabet BMS, merging down to at most
/// `mu` output symbols after every step, and scores it by its Bhattacharyya
/// parameter. Cost grows as `N log N · mu²`, so this is meant for moderate
/// `N`.
pub fn degrading_merge_construct(bank: &ChannelBank, mu: usize) -> Result<ReliabilityProfile> {
    let ch = merged_channels(bank, mu)?;
    Ok(ReliabilityProfile {
        method: ConstructionMethod::DegradingMerge { mu },
        scores: ch.iter().map(bms_bhattacharyya).collect(),
        complement: Some(ch.iter().map(bms_bhattacharyya_complement).collect()),
    })
}

/// The same merged channels scored by their MAP error probability, which is
/// what SC decoding errors depend on. Scores lie in `[0, 1/2]`.
pub fn degrading_merge_error_construct(bank: &ChannelBank, mu: usize) -> Result<ReliabilityProfile> {
    let ch = merged_channels(bank, mu)?;
    Ok(ReliabilityProfile {
        method: ConstructionMethod::MergeErrorProbability { mu },
        scores: ch.iter().map(bms_error_probability).collect(),
        complement: Some(ch.iter().map(bms_error_margin).collect()),
    })
}
