//! LSB-plane adapter for 8-bit grayscale images (PNG, PGM).
//!
//! Pixels are read row-major. The cover is the first `N` least significant
//! bits, where `N` is the largest power of two not above the pixel count;
//! the remaining pixels are left untouched.

use std::path::Path;

use image::GrayImage;
use polarsteg_core::BitVector;

use crate::Error;

pub fn load_gray(path: &Path) -> Result<GrayImage, Error> {
    Ok(image::open(path)?.into_luma8())
}

/// Largest power of two not above `pixels` (0 for an empty image).
pub fn usable_len(pixels: usize) -> usize {
    if pixels == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - pixels.leading_zeros())
    }
}

pub fn cover_bits(img: &GrayImage) -> BitVector {
    let raw = img.as_raw();
    let n = usable_len(raw.len());
    BitVector::from_bools(raw[..n].iter().map(|&v| v & 1 == 1))
}

/// Writes `bits` into the LSBs of the leading pixels.
pub fn apply_bits(img: &mut GrayImage, bits: &BitVector) -> Result<(), Error> {
    let len = img.as_raw().len();
    if bits.len() > len {
        return Err(Error::Format(format!("{} bits do not fit {len} pixels", bits.len())));
    }
    for (px, b) in img.iter_mut().zip(bits.iter()) {
        *px = (*px & !1) | b as u8;
    }
    Ok(())
}

/// Saves as PNG or PGM depending on the extension.
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<(), Error> {
    Ok(img.save(path)?)
}
