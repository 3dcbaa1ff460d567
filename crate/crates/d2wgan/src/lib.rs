//! File formats, disk-backed data loading, run directories, evaluation
//! sets, the listening-test service and the `d2wgan` command line, built on
//! [`d2wgan_core`].

pub mod checkpoint_io;
pub mod cli;
pub mod config;
pub mod corpus;
mod error;
pub mod evalset;
pub mod listen;
pub mod plot;
pub mod preprocess;
pub mod rundir;
pub mod store;
pub mod wav;

pub use d2wgan_core as core;
pub use error::{Error, Result};
