use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user_id: String,
    /// Mean over sessions of the session's maximum TAC, in µg/L.
    pub tac_feature: f64,
    pub window_count: usize,
    pub intox_window_fraction: f64,
}

/// `low`, `medium`, `high` for three clusters ordered by centroid.
pub fn cluster_name(index: usize, k: usize) -> String {
    match (k, index) {
        (3, 0) => "low".to_string(),
        (3, 1) => "medium".to_string(),
        (3, 2) => "high".to_string(),
        _ => format!("cluster{index}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<FoldAssignment>,
    pub test: Vec<String>,
    /// Cluster name per user.
    pub clusters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanViolation {
    TrainValidationOverlap { fold: usize, user: String },
    TestUserInFold { fold: usize, user: String },
    EmptyValidation { fold: usize },
    /// A cluster has users but none of them is held out for testing.
    ClusterWithoutTestUser { cluster: String },
}

impl SplitPlan {
    /// Every broken invariant; empty for a well-formed plan.
    pub fn validate(&self) -> Vec<PlanViolation> {
        let mut out = Vec::new();
        let test: BTreeSet<&String> = self.test.iter().collect();
        for (f, fold) in self.folds.iter().enumerate() {
            let train: BTreeSet<&String> = fold.train.iter().collect();
            if fold.validation.is_empty() {
                out.push(PlanViolation::EmptyValidation { fold: f });
            }
            for u in &fold.validation {
                if train.contains(u) {
                    out.push(PlanViolation::TrainValidationOverlap { fold: f, user: u.clone() });
                }
            }
            for u in fold.train.iter().chain(&fold.validation) {
                if test.contains(u) {
                    out.push(PlanViolation::TestUserInFold { fold: f, user: u.clone() });
                }
            }
        }
        let mut covered: BTreeSet<&String> = BTreeSet::new();
        for u in &self.test {
            if let Some(c) = self.clusters.get(u) {
                covered.insert(c);
            }
        }
        let all: BTreeSet<&String> = self.clusters.values().collect();
        for c in all.difference(&covered) {
            out.push(PlanViolation::ClusterWithoutTestUser { cluster: (*c).clone() });
        }
        out
    }
}

/// Holds out the user with the most windows from each cluster (ties to the
/// smallest id) and deals the rest into `folds` validation groups. Users are
/// visited largest first; each goes to the emptiest fold whose window-weighted
/// intoxicated fraction it moves closest to the global one. Each fold trains
/// on the remaining users outside its validation group.
pub fn build_split_plan(
    summaries: &[UserSummary],
    clusters: &[usize],
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<SplitPlan, EvalError> {
    if summaries.len() != clusters.len() {
        return Err(EvalError::LengthMismatch { scores: summaries.len(), labels: clusters.len() });
    }
    if folds == 0 || k == 0 {
        return Err(EvalError::Invalid("folds and k must be positive"));
    }
    if clusters.iter().any(|&c| c >= k) {
        return Err(EvalError::Invalid("cluster index out of range"));
    }
    let ids: BTreeSet<&String> = summaries.iter().map(|s| &s.user_id).collect();
    if ids.len() != summaries.len() {
        return Err(EvalError::Invalid("duplicate user id"));
    }

    let mut test_idx: Vec<Option<usize>> = vec![None; k];
    for (i, (s, &c)) in summaries.iter().zip(clusters).enumerate() {
        let better = match test_idx[c] {
            None => true,
            Some(j) => {
                let t = &summaries[j];
                s.window_count > t.window_count || (s.window_count == t.window_count && s.user_id < t.user_id)
            }
        };
        if better {
            test_idx[c] = Some(i);
        }
    }
    let empty: Vec<String> = (0..k).filter(|&c| test_idx[c].is_none()).map(|c| cluster_name(c, k)).collect();
    if !empty.is_empty() {
        return Err(EvalError::EmptyClusters(empty));
    }
    let test_set: BTreeSet<usize> = test_idx.iter().flatten().copied().collect();
    let mut rest: Vec<usize> = (0..summaries.len()).filter(|i| !test_set.contains(i)).collect();
    if rest.len() < folds {
        return Err(EvalError::TooFewUsers { remaining: rest.len(), folds });
    }

    rest.sort_by(|&a, &b| summaries[a].user_id.cmp(&summaries[b].user_id));
    rest.shuffle(&mut stream(seed, &[0x5B]));
    rest.sort_by(|&a, &b| summaries[b].window_count.cmp(&summaries[a].window_count));

    let intox = |i: usize| summaries[i].intox_window_fraction * summaries[i].window_count as f64;
    let total_w: f64 = rest.iter().map(|&i| summaries[i].window_count as f64).sum();
    let total_x: f64 = rest.iter().map(|&i| intox(i)).sum();
    let global = if total_w > 0.0 { total_x / total_w } else { 0.0 };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); folds];
    let mut windows = vec![0.0f64; folds];
    let mut positives = vec![0.0f64; folds];
    for &u in &rest {
        let fewest = members.iter().map(Vec::len).min().expect("folds > 0");
        let mut pick = None;
        let mut pick_gap = f64::INFINITY;
        for f in 0..folds {
            if members[f].len() != fewest {
                continue;
            }
            let w = windows[f] + summaries[u].window_count as f64;
            let frac = if w > 0.0 { (positives[f] + intox(u)) / w } else { global };
            let gap = (frac - global).abs();
            if gap < pick_gap {
                pick = Some(f);
                pick_gap = gap;
            }
        }
        let f = pick.expect("some fold has the fewest members");
        members[f].push(u);
        windows[f] += summaries[u].window_count as f64;
        positives[f] += intox(u);
    }

    let id = |i: &usize| summaries[*i].user_id.clone();
    let fold_plans = members
        .iter()
        .map(|val| {
            let mut validation: Vec<String> = val.iter().map(id).collect();
            validation.sort();
            let mut train: Vec<String> = rest.iter().filter(|i| !val.contains(i)).map(id).collect();
            train.sort();
            FoldAssignment { train, validation }
        })
        .collect();
    let mut test: Vec<String> = test_set.iter().map(id).collect();
    test.sort();
    let clusters = summaries
        .iter()
        .zip(clusters)
        .map(|(s, &c)| (s.user_id.clone(), cluster_name(c, k)))
        .collect();
    Ok(SplitPlan { folds: fold_plans, test, clusters })
}
