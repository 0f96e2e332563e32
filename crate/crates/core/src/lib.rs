//! Core algorithms for smartwatch-based intoxication detection.
//!
//! Everything in this crate is allocation-only (`no_std` + `alloc`): sensor
//! session segmentation and TAC labeling, the low-pass / resample / window
//! preprocessing chain, a hyperdimensional classifier, from-scratch 1D-CNN and
//! SVM-head networks, the grouped evaluation protocol with its metrics, and a
//! deterministic synthetic data generator. File formats, CSV parsing, and the
//! command-line driver live in the `intox` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dsp;
pub mod eval;
pub mod hdc;
pub mod ingest;
pub mod nn;
pub mod rng;
pub mod synth;

pub use dsp::{ChannelMatrix, CHANNELS, CHANNEL_NAMES, HR_CHANNEL};
pub use ingest::{LabeledWindow, SensorSample, Session, TacReading};
