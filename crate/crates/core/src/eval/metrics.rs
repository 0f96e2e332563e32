use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const DEFAULT_THRESHOLD_STEP: f64 = 0.001;

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// `(score, positives, negatives)` for each distinct score, ascending.
fn tie_groups(scores: &[f64], labels: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for i in idx {
        let (s, l) = (scores[i], labels[i]);
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if l {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, l as usize, !l as usize)),
        }
    }
    groups
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed exactly from tie-grouped ranks.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::UndefinedMetric("ROC-AUC needs both classes"));
    }
    // Twice the Mann-Whitney U statistic, kept integral.
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    for (_, p, n) in tie_groups(scores, labels) {
        twice_u += 2 * p as u64 * neg_below + (p * n) as u64;
        neg_below += n as u64;
    }
    Ok(twice_u as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Average precision: `sum_k (R_k - R_{k-1}) P_k` over the distinct score
/// thresholds from highest to lowest, predicting positive when
/// `score >= threshold`.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(EvalError::UndefinedMetric("PR-AUC needs positive samples"));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (_, p, n) in tie_groups(scores, labels).into_iter().rev() {
        tp += p;
        fp += n;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// Rates with the Table-style naming: sober accuracy is specificity, drunk
/// accuracy is recall, and F1 is taken on the intoxicated class. A rate
/// whose denominator is empty is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub sober_accuracy: f64,
    pub drunk_accuracy: f64,
    pub f1: f64,
}

pub fn classification_metrics(predictions: &[bool], labels: &[bool]) -> Result<ClassificationMetrics, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut tn, mut fp, mut fal) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fal += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(ClassificationMetrics {
        accuracy: ratio(tp + tn, labels.len()),
        sober_accuracy: ratio(tn, tn + fp),
        drunk_accuracy: ratio(tp, tp + fal),
        f1: ratio(2 * tp, 2 * tp + fp + fal),
    })
}

pub fn predict_at(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

/// F1-maximizing threshold on the grid `min + j * step`, predicting positive
/// when `score >= threshold`. Ties resolve to the smallest threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool], step: f64) -> Result<f64, EvalError> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::UndefinedMetric("threshold selection needs both classes"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(EvalError::Invalid("grid step must be positive"));
    }
    let mut pos_scores: Vec<f64> = Vec::with_capacity(pos);
    let mut neg_scores: Vec<f64> = Vec::with_capacity(neg);
    for (&s, &l) in scores.iter().zip(labels) {
        if l {
            pos_scores.push(s)
        } else {
            neg_scores.push(s)
        }
    }
    pos_scores.sort_by(f64::total_cmp);
    neg_scores.sort_by(f64::total_cmp);
    let lo = pos_scores[0].min(neg_scores[0]);
    let hi = pos_scores[pos - 1].max(neg_scores[neg - 1]);
    let steps = libm::ceil((hi - lo) / step) as usize;

    let mut best = (f64::NEG_INFINITY, lo);
    for j in 0..=steps {
        let t = lo + j as f64 * step;
        let tp = pos - pos_scores.partition_point(|&s| s < t);
        let fp = neg - neg_scores.partition_point(|&s| s < t);
        let fal = pos - tp;
        let f1 = if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fal) as f64
        };
        if f1 > best.0 {
            best = (f1, t);
        }
    }
    Ok(best.1)
}
