//! Evaluation protocol: TAC-level user clustering, grouped fold plans with
//! held-out test users, ranking and classification metrics, threshold
//! selection, and the report structure.

mod kmeans;
mod metrics;
mod report;
mod split;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use kmeans::{kmeans_1d, KMeansConfig, KMeansResult};
pub use metrics::{
    classification_metrics, pr_auc, predict_at, roc_auc, select_threshold, ClassificationMetrics,
    DEFAULT_THRESHOLD_STEP,
};
pub use report::{EvalReport, FoldReport, MetricSet};
pub use split::{
    build_split_plan, cluster_name, FoldAssignment, PlanViolation, SplitPlan, UserSummary,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("empty input")]
    Empty,
    #[error("k = {k} exceeds the {n} values to cluster")]
    TooFewValues { k: usize, n: usize },
    #[error("clusters without users: {0:?}")]
    EmptyClusters(Vec<String>),
    #[error("{remaining} users left after test selection, need at least {folds}")]
    TooFewUsers { remaining: usize, folds: usize },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}
