//! Successive cancellation list decoding with lazily copied path state.
//!
//! Same traversal and memory layout per path as [`super::sc`], but every layer
//! array lives in a per-layer pool of `L` slots. Paths refer to slots by
//! index; cloning a path only bumps reference counts and a slot is copied the
//! first time a sharing path writes to it. Each layer needs at most `L` slots.

use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{combine, penalty, CheckNode};
use crate::transform::kronecker_bytes_in_place;

pub(crate) struct ListDecoder {
    order: u32,
    max_paths: usize,
    channel: Vec<f64>,
    // per layer s < order: max_paths slots of 2^s LLRs / 2^{s+1} bits
    llr_pool: Vec<Vec<f64>>,
    bit_pool: Vec<Vec<u8>>,
    refcount: Vec<Vec<u32>>,
    free_slots: Vec<Vec<usize>>,
    // slot_of[path * order + s]
    slot_of: Vec<usize>,
    active: Vec<bool>,
    metric: Vec<f64>,
    pending: Vec<u8>,
    keep: Vec<[bool; 2]>,
    // final natural-domain codeword of each path
    codewords: Vec<u8>,
}

pub(crate) struct ListOutcome {
    pub(crate) decisions: Vec<u8>,
    pub(crate) metric: f64,
}

impl ListDecoder {
    pub(crate) fn new(order: u32, max_paths: usize) -> Self {
        assert!(max_paths >= 1);
        let len = 1usize << order;
        let layers = order as usize;
        Self {
            order,
            max_paths,
            channel: vec![0.0; len],
            llr_pool: (0..layers).map(|s| vec![0.0; max_paths << s]).collect(),
            bit_pool: (0..layers).map(|s| vec![0; max_paths << (s + 1)]).collect(),
            refcount: vec![vec![0; max_paths]; layers],
            free_slots: vec![Vec::with_capacity(max_paths); layers],
            slot_of: vec![0; max_paths * layers],
            active: vec![false; max_paths],
            metric: vec![0.0; max_paths],
            pending: vec![0; max_paths],
            keep: vec![[false; 2]; max_paths],
            codewords: vec![0; max_paths * len],
        }
    }

    fn len(&self) -> usize {
        1 << self.order
    }

    pub(crate) fn load_channel(&mut self, channel: &[f64]) {
        self.channel.copy_from_slice(channel);
    }

    fn reset(&mut self) {
        let layers = self.order as usize;
        for s in 0..layers {
            self.refcount[s].iter_mut().for_each(|r| *r = 0);
            self.free_slots[s].clear();
            // pop() hands out low slot numbers first
            self.free_slots[s].extend((1..self.max_paths).rev());
            self.refcount[s][0] = 1;
        }
        self.slot_of.iter_mut().for_each(|s| *s = 0);
        self.active.iter_mut().for_each(|a| *a = false);
        self.active[0] = true;
        self.metric[0] = 0.0;
    }

    fn slot(&self, path: usize, s: u32) -> usize {
        self.slot_of[path * self.order as usize + s as usize]
    }

    /// Gives `path` exclusive ownership of its layer-`s` slot.
    fn make_private(&mut self, path: usize, s: u32) -> usize {
        let layer = s as usize;
        let idx = path * self.order as usize + layer;
        let slot = self.slot_of[idx];
        if self.refcount[layer][slot] == 1 {
            return slot;
        }
        let fresh = self.free_slots[layer]
            .pop()
            .expect("list decoder ran out of layer slots");
        self.refcount[layer][slot] -= 1;
        self.refcount[layer][fresh] = 1;
        let w = 1usize << s;
        self.llr_pool[layer].copy_within(slot * w..slot * w + w, fresh * w);
        self.bit_pool[layer].copy_within(slot * 2 * w..slot * 2 * w + 2 * w, fresh * 2 * w);
        self.slot_of[idx] = fresh;
        fresh
    }

    fn clone_path(&mut self, src: usize) -> usize {
        let dst = (0..self.max_paths)
            .find(|&p| !self.active[p])
            .expect("no inactive path available");
        let layers = self.order as usize;
        for s in 0..layers {
            let slot = self.slot_of[src * layers + s];
            self.slot_of[dst * layers + s] = slot;
            self.refcount[s][slot] += 1;
        }
        self.active[dst] = true;
        self.metric[dst] = self.metric[src];
        dst
    }

    fn kill_path(&mut self, path: usize) {
        let layers = self.order as usize;
        for s in 0..layers {
            let slot = self.slot_of[path * layers + s];
            self.refcount[s][slot] -= 1;
            if self.refcount[s][slot] == 0 {
                self.free_slots[s].push(slot);
            }
        }
        self.active[path] = false;
    }

    fn leaf_llr(&self, path: usize) -> f64 {
        if self.order == 0 {
            self.channel[0]
        } else {
            self.llr_pool[0][self.slot(path, 0)]
        }
    }

    fn descend<K: CheckNode>(&mut self, path: usize, phi: usize) {
        let n = self.order;
        if n == 0 {
            return;
        }
        let start = if phi == 0 {
            n
        } else {
            let t = phi.trailing_zeros();
            let h = 1usize << t;
            let out_slot = self.make_private(path, t);
            let (lo, hi) = self.llr_pool.split_at_mut(t as usize + 1);
            let input = if t + 1 == n {
                &self.channel[..]
            } else {
                let in_slot = self.slot_of[path * n as usize + t as usize + 1];
                &hi[0][in_slot * 2 * h..in_slot * 2 * h + 2 * h]
            };
            let out = &mut lo[t as usize][out_slot * h..out_slot * h + h];
            let left = &self.bit_pool[t as usize][out_slot * 2 * h..out_slot * 2 * h + h];
            for j in 0..h {
                out[j] = combine(input[j], input[j + h], left[j]);
            }
            t
        };
        for s in (1..=start).rev() {
            let h = 1usize << (s - 1);
            let out_slot = self.make_private(path, s - 1);
            let (lo, hi) = self.llr_pool.split_at_mut(s as usize);
            let input = if s == n {
                &self.channel[..]
            } else {
                let in_slot = self.slot_of[path * n as usize + s as usize];
                &hi[0][in_slot * 2 * h..in_slot * 2 * h + 2 * h]
            };
            let out = &mut lo[s as usize - 1][out_slot * h..out_slot * h + h];
            for j in 0..h {
                out[j] = K::check(input[j], input[j + h]);
            }
        }
    }

    fn ascend(&mut self, path: usize, phi: usize, u: u8) {
        let n = self.order;
        let len = self.len();
        if n == 0 {
            self.codewords[path] = u;
            return;
        }
        let slot0 = self.make_private(path, 0);
        self.bit_pool[0][slot0 * 2 + (phi & 1)] = u;
        let mut s = 0u32;
        while (phi >> s) & 1 == 1 {
            let h = 1usize << s;
            let src_slot = self.slot(path, s);
            if s + 1 == n {
                let src = &self.bit_pool[s as usize][src_slot * 2 * h..src_slot * 2 * h + 2 * h];
                let dst = &mut self.codewords[path * len..path * len + len];
                for j in 0..h {
                    dst[j] = src[j] ^ src[j + h];
                    dst[j + h] = src[j + h];
                }
                break;
            }
            let dst_slot = self.make_private(path, s + 1);
            let side = (phi >> (s + 1)) & 1;
            let (lo, hi) = self.bit_pool.split_at_mut(s as usize + 1);
            let src = &lo[s as usize][src_slot * 2 * h..src_slot * 2 * h + 2 * h];
            let base = dst_slot * 4 * h + side * 2 * h;
            let dst = &mut hi[0][base..base + 2 * h];
            for j in 0..h {
                dst[j] = src[j] ^ src[j + h];
                dst[j + h] = src[j + h];
            }
            s += 1;
        }
    }

    /// Decodes with `frozen[i]` equal to 0/1 for frozen positions and
    /// anything else for free ones.
    pub(crate) fn run<K: CheckNode>(&mut self, frozen: &[u8]) -> ListOutcome {
        let len = self.len();
        debug_assert_eq!(frozen.len(), len);
        self.reset();
        let mut candidates: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * self.max_paths);
        let mut actives: Vec<usize> = Vec::with_capacity(self.max_paths);
        for phi in 0..len {
            actives.clear();
            actives.extend((0..self.max_paths).filter(|&p| self.active[p]));
            for &p in &actives {
                self.descend::<K>(p, phi);
            }
            if frozen[phi] <= 1 {
                let v = frozen[phi];
                for &p in &actives {
                    self.metric[p] += penalty(self.leaf_llr(p), v);
                    self.pending[p] = v;
                }
            } else if 2 * actives.len() <= self.max_paths {
                for &p in &actives {
                    let l = self.leaf_llr(p);
                    let base = self.metric[p];
                    let q = self.clone_path(p);
                    self.metric[p] = base + penalty(l, 0);
                    self.pending[p] = 0;
                    self.metric[q] = base + penalty(l, 1);
                    self.pending[q] = 1;
                }
            } else {
                candidates.clear();
                for &p in &actives {
                    let l = self.leaf_llr(p);
                    candidates.push((self.metric[p] + penalty(l, 0), p, 0));
                    candidates.push((self.metric[p] + penalty(l, 1), p, 1));
                }
                candidates.sort_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then(a.1.cmp(&b.1))
                        .then(a.2.cmp(&b.2))
                });
                candidates.truncate(self.max_paths);
                let keep = &mut self.keep;
                keep.iter_mut().for_each(|k| *k = [false; 2]);
                for &(_, p, b) in &candidates {
                    keep[p][b as usize] = true;
                }
                for &p in &actives {
                    if self.keep[p] == [false, false] {
                        self.kill_path(p);
                    }
                }
                for &p in &actives {
                    let [keep0, keep1] = self.keep[p];
                    if !keep0 && !keep1 {
                        continue;
                    }
                    let l = self.leaf_llr(p);
                    let base = self.metric[p];
                    match (keep0, keep1) {
                        (true, true) => {
                            let q = self.clone_path(p);
                            self.metric[p] = base + penalty(l, 0);
                            self.pending[p] = 0;
                            self.metric[q] = base + penalty(l, 1);
                            self.pending[q] = 1;
                        }
                        (true, false) => {
                            self.metric[p] = base + penalty(l, 0);
                            self.pending[p] = 0;
                        }
                        (false, true) => {
                            self.metric[p] = base + penalty(l, 1);
                            self.pending[p] = 1;
                        }
                        (false, false) => unreachable!(),
                    }
                }
            }
            for p in 0..self.max_paths {
                if self.active[p] {
                    let u = self.pending[p];
                    self.ascend(p, phi, u);
                }
            }
        }
        let best = (0..self.max_paths)
            .filter(|&p| self.active[p])
            .min_by(|&a, &b| {
                self.metric[a]
                    .total_cmp(&self.metric[b])
                    .then(a.cmp(&b))
            })
            .expect("at least one surviving path");
        let mut decisions = self.codewords[best * len..best * len + len].to_vec();
        kronecker_bytes_in_place(&mut decisions);
        ListOutcome {
            decisions,
            metric: self.metric[best],
        }
    }
}
