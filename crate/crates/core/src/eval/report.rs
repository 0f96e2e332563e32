use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, pr_auc, roc_auc};
use super::{EvalError, SplitPlan};

/// Metrics of one model on one user set. Ranking metrics are `None` when the
/// set holds a single class. `threshold` is `None` for models that decide by
/// the sign of their score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub accuracy: f64,
    pub sober_accuracy: f64,
    pub drunk_accuracy: f64,
    pub f1: f64,
    pub threshold: Option<f64>,
    pub windows: usize,
    pub positives: usize,
}

impl MetricSet {
    /// Predicts intoxicated when `score >= threshold`, or `score > 0` when no
    /// threshold is given.
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: Option<f64>) -> Result<Self, EvalError> {
        let predictions: Vec<bool> = match threshold {
            Some(t) => scores.iter().map(|&s| s >= t).collect(),
            None => scores.iter().map(|&s| s > 0.0).collect(),
        };
        let c = classification_metrics(&predictions, labels)?;
        let optional = |r: Result<f64, EvalError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::UndefinedMetric(_)) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self {
            roc_auc: optional(roc_auc(scores, labels))?,
            pr_auc: optional(pr_auc(scores, labels))?,
            accuracy: c.accuracy,
            sober_accuracy: c.sober_accuracy,
            drunk_accuracy: c.drunk_accuracy,
            f1: c.f1,
            threshold,
            windows: labels.len(),
            positives: labels.iter().filter(|&&l| l).count(),
        })
    }

    /// All rates lie in `[0, 1]`.
    pub fn is_bounded(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        [self.accuracy, self.sober_accuracy, self.drunk_accuracy, self.f1]
            .into_iter()
            .chain(self.roc_auc)
            .chain(self.pr_auc)
            .all(unit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub validation: MetricSet,
    /// The fold's model scored on the held-out test users.
    pub test: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub version: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub plan: SplitPlan,
    pub folds: Vec<FoldReport>,
    /// Fold whose model is reported on the test set: the one with the best
    /// validation ROC-AUC, earliest on ties.
    pub selected_fold: usize,
    pub test: MetricSet,
}

/// Index of the fold with the highest validation ROC-AUC; folds with an
/// undefined value rank last and ties go to the earliest fold.
pub(crate) fn best_fold(folds: &[FoldReport]) -> Option<usize> {
    let key = |f: &FoldReport| f.validation.roc_auc.unwrap_or(f64::NEG_INFINITY);
    let mut best: Option<usize> = None;
    for (i, f) in folds.iter().enumerate() {
        if best.map_or(true, |b| key(f) > key(&folds[b])) {
            best = Some(i);
        }
    }
    best
}

impl EvalReport {
    pub fn new(
        model: String,
        version: String,
        seed: u64,
        config_fingerprint: String,
        plan: SplitPlan,
        folds: Vec<FoldReport>,
    ) -> Result<Self, EvalError> {
        let selected_fold = best_fold(&folds).ok_or(EvalError::Empty)?;
        let test = folds[selected_fold].test.clone();
        Ok(Self {
            model,
            version,
            seed,
            config_fingerprint,
            plan,
            folds,
            selected_fold,
            test,
        })
    }

    /// Fixed-width table: one row per fold on validation, then the test row.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>9} {:>9} {:>9} {:>15} {:>15} {:>9} {:>10}",
            "Set", "ROC-AUC", "PR-AUC", "Accuracy", "Sober Accuracy", "Drunk Accuracy", "F1 Score", "Threshold"
        );
        let opt = |v: Option<f64>| v.map_or_else(|| String::from("N/A"), |x| format!("{x:.6}"));
        let mut row = |name: String, m: &MetricSet| {
            let _ = writeln!(
                out,
                "{:<14} {:>9} {:>9} {:>9.6} {:>15.6} {:>15.6} {:>9.6} {:>10}",
                name,
                opt(m.roc_auc),
                opt(m.pr_auc),
                m.accuracy,
                m.sober_accuracy,
                m.drunk_accuracy,
                m.f1,
                opt(m.threshold)
            );
        };
        for f in &self.folds {
            row(format!("{} fold {}", self.model, f.fold + 1), &f.validation);
        }
        row(format!("{} test", self.model), &self.test);
        out
    }
}
