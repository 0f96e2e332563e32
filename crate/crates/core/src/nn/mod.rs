//! From-scratch reference networks: a three-block 1D-CNN with a logistic
//! output and a flatten/dropout/dense/ReLU feature extractor topped by a
//! linear hinge-loss scorer. Both train with plain minibatch gradient
//! descent.
//!
//! Parameters are stored as `f64` but always hold values exactly
//! representable in `f32`: initializers and every optimizer step round to
//! single precision, so a 32-bit checkpoint reproduces the model bit for
//! bit.

mod cnn;
mod layers;
mod svm;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cnn::{Cnn, CnnTrace, CNN_FILTERS, CNN_KERNELS};
pub use layers::Conv1d;
pub use svm::{DropoutKey, SvmHead, SVM_HIDDEN};
pub use train::{train_cnn, train_svm, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("expected input of {expected_rows} channels and at least {min_cols} samples, got {rows}x{cols}")]
    Shape {
        expected_rows: usize,
        min_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("training needs both classes (sober {sober}, intoxicated {intoxicated})")]
    SingleClass { sober: usize, intoxicated: usize },
    #[error("non-finite loss {loss} at {context}")]
    NonFinite { loss: f64, context: String },
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error("parameter layout mismatch: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// L2 weight penalty of the SVM head.
    pub l2: f64,
    /// Input dropout rate of the SVM head.
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 32,
            epochs: 50,
            l2: 1e-4,
            dropout: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(NnError::Config("learning rate must be positive"));
        }
        if self.batch == 0 {
            return Err(NnError::Config("batch size must be positive"));
        }
        if self.epochs == 0 {
            return Err(NnError::Config("epoch count must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::Config("dropout must lie in [0, 1)"));
        }
        if !(self.l2 >= 0.0) {
            return Err(NnError::Config("l2 must be non-negative"));
        }
        Ok(())
    }
}

/// A model whose parameters can be visited as a fixed, ordered list of named
/// tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<(&'static str, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// All parameters concatenated in tensor order.
    fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|(_, t)| t.iter().copied()).collect()
    }

    fn set_flat(&mut self, values: &[f64]) -> Result<(), NnError> {
        let total = self.parameter_count();
        if values.len() != total {
            return Err(NnError::Layout(alloc::format!(
                "{} values for {} parameters",
                values.len(),
                total
            )));
        }
        let mut offset = 0;
        for (_, t) in self.tensors_mut() {
            t.copy_from_slice(&values[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }
}

/// Rounds to the nearest `f32`.
#[inline]
pub(crate) fn to_f32_grid(v: f64) -> f64 {
    v as f32 as f64
}

/// Numerically stable `sigmoid`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target.
pub fn bce_with_logit(z: f64, target: bool) -> f64 {
    let y = if target { 1.0 } else { 0.0 };
    z.max(0.0) - z * y + libm::log1p(libm::exp(-libm::fabs(z)))
}

pub(crate) fn check_batch(inputs: usize, labels: usize) -> Result<(), NnError> {
    if inputs == 0 {
        return Err(NnError::EmptyBatch);
    }
    if inputs != labels {
        return Err(NnError::LengthMismatch { inputs, labels });
    }
    Ok(())
}
