//! Single-path successive cancellation.
//!
//! Works in the natural (`F^{⊗n}`) domain: channel LLRs are supplied already
//! bit-reversed. Layer `s` holds the LLRs of the current length-`2^s` node at
//! `llr[2^s .. 2^{s+1}]` (layer `n` is the channel) and the left/right child
//! codewords at `bits[2^{s+1} .. 2^{s+2}]`.

use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{combine, penalty, CheckNode};

pub(crate) struct ScDecoder {
    order: u32,
    llr: Vec<f64>,
    bits: Vec<u8>,
    pub(crate) decisions: Vec<u8>,
    pub(crate) metric: f64,
}

impl ScDecoder {
    pub(crate) fn new(order: u32) -> Self {
        let len = 1usize << order;
        Self {
            order,
            llr: vec![0.0; 2 * len],
            bits: vec![0; 2 * len],
            decisions: vec![0; len],
            metric: 0.0,
        }
    }

    pub(crate) fn len(&self) -> usize {
        1 << self.order
    }

    /// Loads natural-order channel LLRs.
    pub(crate) fn load_channel(&mut self, channel: &[f64]) {
        let len = self.len();
        self.llr[len..].copy_from_slice(channel);
    }

    /// Runs the decoder; `decide(i, llr)` returns the bit taken at input
    /// position `i` given its LLR.
    pub(crate) fn run<K: CheckNode, D: FnMut(usize, f64) -> u8>(&mut self, mut decide: D) {
        self.metric = 0.0;
        for phi in 0..self.len() {
            self.descend::<K>(phi);
            let l = self.llr[1];
            let u = decide(phi, l);
            debug_assert!(u <= 1);
            self.metric += penalty(l, u);
            self.decisions[phi] = u;
            self.ascend(phi, u);
        }
    }

    fn descend<K: CheckNode>(&mut self, phi: usize) {
        let n = self.order;
        if n == 0 {
            return;
        }
        let start = if phi == 0 {
            n
        } else {
            let t = phi.trailing_zeros();
            let h = 1usize << t;
            let (lo, hi) = self.llr.split_at_mut(2 * h);
            let input = &hi[..2 * h];
            let out = &mut lo[h..2 * h];
            let left = &self.bits[2 * h..3 * h];
            for j in 0..h {
                out[j] = combine(input[j], input[j + h], left[j]);
            }
            t
        };
        for s in (1..=start).rev() {
            let h = 1usize << (s - 1);
            let (lo, hi) = self.llr.split_at_mut(2 * h);
            let input = &hi[..2 * h];
            let out = &mut lo[h..2 * h];
            for j in 0..h {
                out[j] = K::check(input[j], input[j + h]);
            }
        }
    }

    fn ascend(&mut self, phi: usize, u: u8) {
        let n = self.order;
        if n == 0 {
            return;
        }
        self.bits[2 + (phi & 1)] = u;
        let mut s = 0;
        while s + 1 < n && (phi >> s) & 1 == 1 {
            let h = 1usize << s;
            let side = (phi >> (s + 1)) & 1;
            let (src, dst) = self.bits.split_at_mut(4 * h);
            let src = &src[2 * h..4 * h];
            let dst = &mut dst[side * 2 * h..side * 2 * h + 2 * h];
            for j in 0..h {
                dst[j] = src[j] ^ src[j + h];
                dst[j + h] = src[j + h];
            }
            s += 1;
        }
    }
}
