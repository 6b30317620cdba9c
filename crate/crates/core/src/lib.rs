//! Inference engine for a spiking vision transformer built around grouped
//! exponential spike coding and group-wise spiking self-attention, together
//! with a synaptic-operation profiler and brute-force reference oracles.
//!
//! The crate is `no_std` + `alloc`; all IO, file formats and the CLI live in
//! the companion `gemst` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attention;
pub mod blocks;
pub mod error;
pub mod exp_coding;
pub mod model;
pub mod neuron;
pub mod oracle;
pub mod profiler;
pub mod tensor;

pub use error::{CoreError, Result};
