//! Algorithmic core for long-gap audio inpainting with single- and
//! dual-critic Wasserstein GANs.
//!
//! Everything here is `no_std` + `alloc`: signal processing, segment
//! geometry, divergence oracles, the convolutional generator and critics
//! with hand-written backpropagation, the alternating Wasserstein training
//! loop, gap splicing and evaluation arithmetic. File formats, the
//! streaming WAV loader, the listening-test service and the command line
//! live in the `d2wgan` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod divergences;
pub mod dsp;
mod error;
pub mod evaluation;
pub mod inpaint;
pub mod kv;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
