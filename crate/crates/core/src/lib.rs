//! Chain-Net automatic modulation classification: baseband signal synthesis
//! for 14 analog and digital formats, Rayleigh multipath and AWGN channel
//! impairment, a binary dataset format, the Chain-Net model, and the
//! training and evaluation harness.

pub mod channel;
pub mod checkpoint;
pub mod dataset;
mod error;
pub mod model;
pub mod modem;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{ChainNet, Mode, NetworkConfig, ShapeTrace};
