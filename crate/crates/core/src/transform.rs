//! The polar transform `x = u·G_N` over GF(2), with
//! `G_N = B_N · [[1,0],[1,1]]^{⊗n}` and `B_N` the bit-reversal permutation.
//!
//! `B_N` commutes with the Kronecker power, so the transform is computed as
//! the natural-order butterfly `v = u·F^{⊗n}` followed by `x_i = v_{rev(i)}`.
//! `G_N` is its own inverse, which is what message extraction relies on.

use alloc::vec::Vec;

use crate::{BitVector, Error, Result};

/// Reverses the low `bits` bits of `i`.
#[inline]
pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// The permutation of `0..2^n` mapping each index to the index whose `n`-bit
/// binary expansion is reversed. It is an involution.
pub fn bit_reversal_permutation(n: u32) -> Result<Vec<usize>> {
    if n >= usize::BITS - 1 {
        return Err(Error::InvalidParameter("bit-reversal order too large"));
    }
    Ok((0..1usize << n).map(|i| bit_reverse(i, n)).collect())
}

/// `log2(len)` for a power-of-two length.
pub fn log2_len(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

// Masks selecting bit positions j with (j & s) == 0, for s = 1, 2, ..., 32.
const LOW_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];

/// Natural-order butterfly `v = u·F^{⊗n}` in place on packed words.
fn kronecker_in_place(words: &mut [u64], len: usize) {
    let n = len.trailing_zeros() as usize;
    for (stage, mask) in LOW_MASKS.iter().enumerate().take(n.min(6)) {
        let s = 1u32 << stage;
        for w in words.iter_mut() {
            *w ^= (*w >> s) & mask;
        }
    }
    let mut stride = 1;
    while stride < words.len() {
        for block in words.chunks_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= b;
            }
        }
        stride *= 2;
    }
}

/// Natural-order butterfly on unpacked 0/1 bytes. Used by the decoders to
/// map a recovered codeword back to the input domain.
pub(crate) fn kronecker_bytes_in_place(v: &mut [u8]) {
    let len = v.len();
    let mut stride = 1;
    while stride < len {
        for block in v.chunks_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= b;
            }
        }
        stride *= 2;
    }
}

fn bit_reverse_in_place(v: &mut BitVector) {
    let len = v.len();
    let n = len.trailing_zeros();
    for i in 0..len {
        let j = bit_reverse(i, n);
        if i < j {
            let (a, b) = (v.get(i), v.get(j));
            v.set(i, b);
            v.set(j, a);
        }
    }
}

/// Applies `G_N` in place. The length must be a power of two.
pub fn polar_transform_in_place(u: &mut BitVector) -> Result<()> {
    let len = u.len();
    log2_len(len)?;
    kronecker_in_place(u.words_mut(), len);
    bit_reverse_in_place(u);
    Ok(())
}

/// Returns `u·G_N`.
pub fn polar_transform(u: &BitVector) -> Result<BitVector> {
    let mut x = u.clone();
    polar_transform_in_place(&mut x)?;
    Ok(x)
}
