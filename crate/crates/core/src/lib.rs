//! Polar-code steganographic coding.
//!
//! This crate holds the allocation-only algorithmic core: the polar
//! transform, subchannel reliability construction for non-identical parallel
//! binary symmetric channels, SC/SCL coders, the adaptive and robust
//! embedding schemes, and the rate-distortion optimizer that produces the
//! per-position embedding probabilities. It is `no_std` (with `alloc`); file
//! formats, the CLI and the experiment harness live in the `polarsteg` crate.
//!
//! # Index convention
//!
//! All indices are 0-based. Position `i` here is position `i + 1` in the
//! usual 1-based `[N] = {1, ..., N}` notation, for cover/stego positions and
//! for subchannel (input) positions alike.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bits;
pub mod channel;
pub mod codec;
pub mod construction;
mod error;
mod math;
pub mod optimizer;
pub mod sampling;
pub mod stego;
pub mod transform;

pub use bits::BitVector;
pub use channel::{ChannelBank, ChannelRole};
pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
