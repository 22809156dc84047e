//! File formats, the experiment harness and CLI support for polar-code
//! steganography. The algorithms live in [`polarsteg_core`].

pub mod bitfile;
pub mod construct;
mod error;
pub mod files;
pub mod lsb;
pub mod sim;

pub use error::Error;
pub use polarsteg_core as core;
