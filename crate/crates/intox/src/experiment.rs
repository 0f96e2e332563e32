//! Grouped cross-validation over a window container.

use std::collections::BTreeMap;

use intox_core::dsp::{fit_normalizer, Normalizer};
use intox_core::eval::{
    build_split_plan, kmeans_1d, select_threshold, EvalReport, FoldReport, MetricSet, SplitPlan,
};
use intox_core::hdc::HdcModel;
use intox_core::nn::{train_cnn, train_svm, Cnn, SvmHead, SVM_HIDDEN};
use intox_core::rng::mix;
use intox_core::{ChannelMatrix, CHANNELS};
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig, VERSION};
use crate::container::WindowSet;
use crate::error::{AppError, Result};
use crate::model::{ModelArtifact, ModelMeta, TrainedModel};

const HDC_MEMORY_STREAM: u64 = 0x71;
const NN_INIT_STREAM: u64 = 0x72;
const NN_TRAIN_STREAM: u64 = 0x73;

/// `report.json`: the report with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: String,
    pub config: RunConfig,
    pub report: EvalReport,
}

pub struct Experiment {
    pub report: EvalReport,
    /// Model of the selected fold.
    pub artifact: ModelArtifact,
}

/// Clusters users on their TAC feature and builds the fold plan.
pub fn plan(cfg: &RunConfig, set: &WindowSet) -> Result<SplitPlan> {
    let users = &set.index.users;
    let values: Vec<f64> = users.iter().map(|u| u.tac_feature).collect();
    let clusters = kmeans_1d(&values, &cfg.kmeans, cfg.seed).map_err(|e| AppError::data("plan", e))?;
    let plan = build_split_plan(users, &clusters.assignments, cfg.kmeans.k, cfg.folds, cfg.seed)
        .map_err(|e| AppError::data("plan", e))?;
    let violations = plan.validate();
    if !violations.is_empty() {
        return Err(AppError::internal("plan", format!("{violations:?}")));
    }
    Ok(plan)
}

struct Subset {
    windows: Vec<ChannelMatrix>,
    labels: Vec<bool>,
}

fn gather(set: &WindowSet, by_user: &BTreeMap<&str, Vec<usize>>, users: &[String]) -> Subset {
    let mut windows = Vec::new();
    let mut labels = Vec::new();
    for u in users {
        for &i in by_user.get(u.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
            windows.push(set.data[i].clone());
            labels.push(set.labels[i]);
        }
    }
    Subset { windows, labels }
}

fn normalize(norm: &Normalizer, windows: &[ChannelMatrix]) -> Result<Vec<ChannelMatrix>> {
    windows.iter().map(|w| norm.apply(w).map_err(|e| AppError::data("normalize", e))).collect()
}

struct FoldOutcome {
    report: FoldReport,
    model: TrainedModel,
    normalizer: Normalizer,
}

fn score_all(model: &TrainedModel, windows: &[ChannelMatrix]) -> Result<Vec<f64>> {
    windows.iter().map(|w| model.score(w)).collect()
}

fn both_classes(labels: &[bool]) -> bool {
    labels.iter().any(|&l| l) && labels.iter().any(|&l| !l)
}

fn run_fold(
    cfg: &RunConfig,
    set: &WindowSet,
    by_user: &BTreeMap<&str, Vec<usize>>,
    plan: &SplitPlan,
    fold: usize,
) -> Result<FoldOutcome> {
    let stage = format!("fold {fold}");
    let data_err = |e: &dyn std::fmt::Display| AppError::data(&stage, e);
    let assignment = &plan.folds[fold];
    let train = gather(set, by_user, &assignment.train);
    let val = gather(set, by_user, &assignment.validation);
    let test = gather(set, by_user, &plan.test);
    if train.windows.is_empty() || val.windows.is_empty() || test.windows.is_empty() {
        return Err(data_err(&"train, validation and test sets must all hold windows"));
    }

    let normalizer = fit_normalizer(&train.windows).map_err(|e| data_err(&e))?;
    let xt = normalize(&normalizer, &train.windows)?;
    let xv = normalize(&normalizer, &val.windows)?;
    let xs = normalize(&normalizer, &test.windows)?;
    let window_len = xt[0].cols();

    let model = match cfg.model {
        ModelKind::Hdc => {
            let mut m = HdcModel::new(cfg.hdc, CHANNELS, mix(cfg.seed, &[HDC_MEMORY_STREAM]))
                .map_err(|e| data_err(&e))?;
            m.fit_ranges(&xt).map_err(|e| data_err(&e))?;
            let encoded = m.encode_all(&xt).map_err(|e| data_err(&e))?;
            m.train_encoded(&encoded, &train.labels).map_err(|e| data_err(&e))?;
            m.refine_encoded(&encoded, &train.labels).map_err(|e| data_err(&e))?;
            TrainedModel::Hdc(m)
        }
        ModelKind::Cnn => {
            let mut m = Cnn::init(CHANNELS, mix(cfg.seed, &[NN_INIT_STREAM, fold as u64]));
            train_cnn(&mut m, &xt, &train.labels, &cfg.train, mix(cfg.seed, &[NN_TRAIN_STREAM, fold as u64]))
                .map_err(|e| data_err(&e))?;
            TrainedModel::Cnn(m)
        }
        ModelKind::Svm => {
            let mut m =
                SvmHead::init(CHANNELS * window_len, SVM_HIDDEN, mix(cfg.seed, &[NN_INIT_STREAM, fold as u64]));
            train_svm(&mut m, &xt, &train.labels, &cfg.train, mix(cfg.seed, &[NN_TRAIN_STREAM, fold as u64]))
                .map_err(|e| data_err(&e))?;
            TrainedModel::Svm(m)
        }
    };

    let val_scores = score_all(&model, &xv)?;
    let test_scores = score_all(&model, &xs)?;
    let threshold = match cfg.model {
        ModelKind::Hdc => None,
        // A single-class validation group cannot rank thresholds; fall back
        // to the model's natural decision point.
        _ if !both_classes(&val.labels) => Some(if cfg.model == ModelKind::Cnn { 0.5 } else { 0.0 }),
        _ => Some(select_threshold(&val_scores, &val.labels, cfg.threshold_step).map_err(|e| data_err(&e))?),
    };
    let metrics = |scores: &[f64], labels: &[bool]| {
        MetricSet::from_scores(scores, labels, threshold).map_err(|e| AppError::internal(&stage, e))
    };
    let report = FoldReport {
        fold,
        validation: metrics(&val_scores, &val.labels)?,
        test: metrics(&test_scores, &test.labels)?,
    };
    Ok(FoldOutcome { report, model, normalizer })
}

/// Trains one model per fold (folds run on separate threads), selects the
/// fold with the best validation ROC-AUC and reports its test metrics.
pub fn train_eval(cfg: &RunConfig, set: &WindowSet) -> Result<Experiment> {
    cfg.validate()?;
    let plan = plan(cfg, set)?;
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in set.index.windows.iter().enumerate() {
        by_user.entry(w.user_id.as_str()).or_default().push(i);
    }

    let outcomes: Vec<Result<FoldOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..plan.folds.len())
            .map(|f| {
                let (plan, by_user) = (&plan, &by_user);
                s.spawn(move || run_fold(cfg, set, by_user, plan, f))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(AppError::internal("train", "fold thread panicked"))))
            .collect()
    });
    let mut outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let reports: Vec<FoldReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let report = EvalReport::new(
        cfg.model.to_string(),
        VERSION.to_string(),
        cfg.seed,
        cfg.fingerprint(),
        plan,
        reports,
    )
    .map_err(|e| AppError::internal("report", e))?;
    let chosen = outcomes.swap_remove(report.selected_fold);
    let meta = ModelMeta {
        version: VERSION.to_string(),
        kind: cfg.model,
        channels: CHANNELS,
        window_len: set.index.window_len,
        hidden: (cfg.model == ModelKind::Svm).then_some(SVM_HIDDEN),
        fold: report.selected_fold,
        threshold: report.test.threshold,
        normalizer: chosen.normalizer,
        config: cfg.clone(),
    };
    Ok(Experiment { report, artifact: ModelArtifact { meta, model: chosen.model } })
}
