//! Edge-oriented non-intrusive load monitoring.
//!
//! `nilm-core` holds the whole numeric pipeline and nothing else:
//!
//! - [`signal`]: calibration, 20 kHz → 10 kHz averaging, 100 ms windowing and a
//!   synthetic appliance/scenario generator standing in for recorded data.
//! - [`features`]: real/apparent/reactive power and odd current harmonics taken
//!   from a 1024-point radix-2 FFT (the [`fft`] module).
//! - [`events`]: switching-event detection and the differential feature vector.
//! - [`models`]: kNN, one-vs-one SVM, MLP and random-forest inference.
//! - [`train`]: training, grid search, permutation importance and feature-count sweeps.
//! - [`cost`]: MAC/cycle/Flash/SRAM estimates against an MCU profile.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the CLI live
//! in the `nilm` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
mod error;
pub mod events;
pub mod features;
pub mod fft;
pub(crate) mod math;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod scenarios;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
