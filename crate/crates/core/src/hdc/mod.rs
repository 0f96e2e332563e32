//! Hyperdimensional classifier over bipolar hypervectors.
//!
//! Windows are encoded key-value style: each channel has a random key, each
//! quantized value a level vector from a correlated chain, and the bound
//! pairs of one time step are bundled and rotated by the step index before
//! the whole window is summed and sign-thresholded. Two integer class
//! accumulators are trained in a single pass and then refined adaptively on
//! misclassified or low-margin samples.

mod memory;
mod model;
mod vector;

use thiserror::Error;

pub use memory::{make_level_vectors, ItemMemory};
pub use model::{HdcConfig, HdcModel, Prediction, RefineStats, WEIGHT_ONE};
pub use vector::{bind, cosine_sim, permute, Hypervector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HdcError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("invalid level count {levels} for dimension {dim}: need 2 <= L <= D/2")]
    BadLevels { levels: usize, dim: usize },
    #[error("item memory quantization ranges are not fitted")]
    Unfitted,
    #[error("window has {got} channels, item memory expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("training needs at least one sample of each class (sober {sober}, intoxicated {intoxicated})")]
    MissingClass { sober: usize, intoxicated: usize },
    #[error("{windows} windows but {labels} labels")]
    LengthMismatch { windows: usize, labels: usize },
    #[error("model is not trained")]
    NotTrained,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}
