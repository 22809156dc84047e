//! Packed bit files.
//!
//! Layout: one header byte holding the number of valid bits in the last
//! data byte (0 means the last byte is full, and an empty payload has no
//! data bytes), followed by the bits packed LSB-first within each byte.

use std::fs;
use std::path::Path;

use polarsteg_core::BitVector;

use crate::Error;

pub fn encode(bits: &BitVector) -> Vec<u8> {
    let len = bits.len();
    let mut out = Vec::with_capacity(1 + len.div_ceil(8));
    out.push((len % 8) as u8);
    for chunk in 0..len.div_ceil(8) {
        let mut byte = 0u8;
        for k in 0..8 {
            let i = 8 * chunk + k;
            if i < len && bits.get(i) {
                byte |= 1 << k;
            }
        }
        out.push(byte);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<BitVector, Error> {
    let (&tail, data) = bytes
        .split_first()
        .ok_or_else(|| Error::Format("bit file is empty".into()))?;
    if tail >= 8 || (data.is_empty() && tail != 0) {
        return Err(Error::Format(format!("bad trailing-bit count {tail}")));
    }
    let len = match (data.len(), tail) {
        (0, _) => 0,
        (n, 0) => 8 * n,
        (n, t) => 8 * (n - 1) + t as usize,
    };
    if tail != 0 {
        let last = data[data.len() - 1];
        if last >> tail != 0 {
            return Err(Error::Format("padding bits are not zero".into()));
        }
    }
    Ok(BitVector::from_bools(
        (0..len).map(|i| (data[i / 8] >> (i % 8)) & 1 == 1),
    ))
}

pub fn read(path: &Path) -> Result<BitVector, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, bits: &BitVector) -> Result<(), Error> {
    fs::write(path, encode(bits)).map_err(|e| Error::io(path, e))
}
