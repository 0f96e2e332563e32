//! File formats, the batch pipeline, the experiment runner, the inference
//! benchmark and the command-line interface built on `intox-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod container;
pub mod csvio;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod model;
pub mod pipeline;

pub use config::{ModelKind, RunConfig, VERSION};
pub use error::{AppError, Result};
