//! Acceptance suite: one line per criterion, nonzero exit when any fails.
//!
//! Runs without the libtest harness so the summary lines always print.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use intox::bench::{random_windows, run_bench};
use intox::container::WindowSet;
use intox::dataset::generate_dataset;
use intox::experiment::{train_eval, ReportFile};
use intox::model::{ModelArtifact, ModelMeta, TrainedModel};
use intox::pipeline::run_pipeline;
use intox::{ModelKind, RunConfig, VERSION};
use intox_core::dsp::{
    design_lowpass, fit_normalizer, make_windows, preprocess_session, resample_to, FilterSpec, PreprocessConfig,
};
use intox_core::eval::{
    build_split_plan, classification_metrics, pr_auc, roc_auc, SplitPlan, UserSummary,
};
use intox_core::hdc::{bind, make_level_vectors, permute, HdcConfig, HdcModel, Hypervector};
use intox_core::ingest::Session;
use intox_core::nn::{Cnn, DropoutKey, Parameters, SvmHead, SVM_HIDDEN};
use intox_core::rng::stream;
use intox_core::{ChannelMatrix, SensorSample, CHANNELS};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took <= budget, format!("took {:.1} s, budget {} s", took.as_secs_f64(), budget.as_secs()))?;
    Ok(format!("{:.2} s", took.as_secs_f64()))
}

// ---------------------------------------------------------------- 1

fn degenerate_rows() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000;
    let positives = 369_378;
    let labels: Vec<bool> = (0..n).map(|i| i < positives).collect();
    let all_pos = classification_metrics(&vec![true; n], &labels).map_err(|e| e.to_string())?;
    let all_neg = classification_metrics(&vec![false; n], &labels).map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6;
    ensure(close(all_pos.accuracy, 0.369378), format!("all-positive accuracy {}", all_pos.accuracy))?;
    ensure(close(all_pos.f1, 0.539483), format!("all-positive F1 {}", all_pos.f1))?;
    ensure(all_pos.sober_accuracy == 0.0 && all_pos.drunk_accuracy == 1.0, "all-positive rates")?;
    ensure(close(all_neg.accuracy, 0.630622), format!("all-negative accuracy {}", all_neg.accuracy))?;
    ensure(all_neg.f1 == 0.0, format!("all-negative F1 {}", all_neg.f1))?;
    let t = within_budget(start, Duration::from_secs(1))?;
    Ok(format!("F1 {:.6} / {:.6}, accuracy {:.6} / {:.6}, {t}", all_pos.f1, all_neg.f1, all_pos.accuracy, all_neg.accuracy))
}

// ---------------------------------------------------------------- 2

fn pairs_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut credit, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                credit += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    credit / pairs
}

fn thresholds_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let total_pos = labels.iter().filter(|&&l| l).count() as f64;
    let (mut area, mut prev_recall) = (0.0, 0.0);
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l).count() as f64;
        let predicted = scores.iter().filter(|&&s| s >= t).count() as f64;
        let recall = tp / total_pos;
        area += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    area
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2024, &[2]);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let n = rng.random_range(2..=12);
        // Coarse scores force ties.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 / 4.0 - 0.5).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let roc = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let pr = pr_auc(&scores, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((roc - pairs_oracle(&scores, &labels)).abs());
        worst = worst.max((pr - thresholds_oracle(&scores, &labels)).abs());
        done += 1;
    }
    ensure(worst <= 1e-12, format!("max abs error {worst:e}"))?;
    let t = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("1000 instances, max abs error {worst:e}, {t}"))
}

// ---------------------------------------------------------------- 3

fn gain_db(h: &[f64], f_hz: f64, fs: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f_hz / fs;
    let (re, im) = h
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (k, &c)| (re + c * (w * k as f64).cos(), im - c * (w * k as f64).sin()));
    20.0 * (re * re + im * im).sqrt().log10()
}

fn dsp_contract() -> Outcome {
    let start = Instant::now();
    let spec = FilterSpec::default();
    let h = design_lowpass(&spec).map_err(|e| e.to_string())?;
    let dc: f64 = h.iter().sum();
    // A float sum is exact only up to summation order.
    ensure((dc - 1.0).abs() <= 4.0 * f64::EPSILON, format!("DC gain {dc}"))?;
    let stop = gain_db(&h, 15.0, spec.input_rate_hz);
    let pass = gain_db(&h, 2.0, spec.input_rate_hz);
    ensure(stop <= -40.0, format!("15 Hz gain {stop:.2} dB"))?;
    ensure(pass.abs() <= 0.5, format!("2 Hz gain {pass:.3} dB"))?;

    let resampled = resample_to(&vec![0.25; 1000], 50.0, 40.0).map_err(|e| e.to_string())?;
    // Output grid k / 40 s for k while k / 40 <= 999 / 50.
    let grid = (999.0f64 * 40.0 / 50.0).floor() as usize + 1;
    ensure(resampled.len() == grid && grid == 800, format!("{} resampled samples", resampled.len()))?;

    let samples: Vec<SensorSample> = (0..=4500)
        .map(|i| SensorSample {
            t: i as f64 / 50.0,
            accel: [(i as f64 * 0.1).sin(), 0.0, 1.0],
            gyro: [0.0; 3],
            hr: (i % 250 == 0).then_some(70.0),
        })
        .collect();
    let session = Session { user_id: "u".into(), samples, sample_rate_nominal: 50.0 };
    let cfg = PreprocessConfig::default();
    let m = preprocess_session(&session, &spec, &cfg).map_err(|e| e.to_string())?;
    let windows = make_windows(&m, 0.0, &cfg).map_err(|e| e.to_string())?;
    ensure(windows.len() == 4, format!("90 s session gave {} windows", windows.len()))?;
    let t = within_budget(start, Duration::from_secs(5))?;
    Ok(format!("DC {dc:.17}, 15 Hz {stop:.1} dB, 2 Hz {pass:.4} dB, 800 samples, 4 windows, {t}"))
}

// ---------------------------------------------------------------- 4

fn cos(a: &Hypervector, b: &Hypervector) -> f64 {
    let dot: i64 = a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| x as i64 * y as i64).sum();
    dot as f64 / a.dim() as f64
}

fn hdc_algebra() -> Outcome {
    let start = Instant::now();
    const D: usize = 3000;
    let mut rng = stream(4, &[]);
    for _ in 0..50 {
        let a = Hypervector::random(D, &mut rng);
        let b = Hypervector::random(D, &mut rng);
        let ab = bind(&a, &b).map_err(|e| e.to_string())?;
        ensure(a.is_bipolar() && ab.is_bipolar(), "bind left the bipolar set")?;
        ensure(bind(&ab, &b).map_err(|e| e.to_string())? == a, "bind is not self-inverse")?;
        let shift = rng.random_range(-5000i64..5000);
        let p = permute(&a, shift);
        ensure(p.is_bipolar() && permute(&p, -shift) == a, "permute is not invertible")?;
        let sums: Vec<i32> = a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| x as i32 + y as i32).collect();
        ensure(Hypervector::from_signs(&sums, &ab).is_bipolar(), "bundling left the bipolar set")?;
    }

    let levels = make_level_vectors(64, D, 9).map_err(|e| e.to_string())?;
    for i in 0..levels.len() {
        ensure(levels[i].is_bipolar(), "level vector not bipolar")?;
        for j in i + 1..levels.len() - 1 {
            let (near, far) = (cos(&levels[i], &levels[j]), cos(&levels[i], &levels[j + 1]));
            ensure(far <= near + 0.05, format!("level similarity rises from {i}->{j} to {i}->{}", j + 1))?;
        }
    }

    let mut data_rng = stream(4, &[1]);
    let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
    let windows: Vec<ChannelMatrix> = labels
        .iter()
        .map(|&l| {
            let off = if l { 1.0 } else { -1.0 };
            let v = (0..CHANNELS * 64).map(|k| data_rng.random_range(-1.0..1.0) + if k >= 6 * 64 { off } else { 0.0 });
            ChannelMatrix::from_vec(CHANNELS, 64, v.collect())
        })
        .collect();
    let cfg = HdcConfig { dim: D, levels: 32, alpha: 0.1, ..HdcConfig::default() };
    let mut a = HdcModel::new(cfg, CHANNELS, 17).map_err(|e| e.to_string())?;
    a.fit_ranges(&windows).map_err(|e| e.to_string())?;
    let mut b = a.clone();
    a.train_single_pass(&windows, &labels).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.shuffle(&mut data_rng);
    let shuffled: Vec<ChannelMatrix> = order.iter().map(|&i| windows[i].clone()).collect();
    let shuffled_labels: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
    b.train_single_pass(&shuffled, &shuffled_labels).map_err(|e| e.to_string())?;
    ensure(a == b, "single pass depends on sample order")?;
    ensure(a.encode(&windows[0]).map_err(|e| e.to_string())?.is_bipolar(), "encoding not bipolar")?;

    let stats = a.refine(&windows, &labels).map_err(|e| e.to_string())?;
    ensure(stats.updates_per_epoch.last() == Some(&0), format!("refine did not converge: {:?}", stats.updates_per_epoch))?;
    let before = a.clone();
    let again = a.refine(&windows, &labels).map_err(|e| e.to_string())?;
    ensure(again.updates_per_epoch == vec![0] && a == before, "refine at a fixpoint changed the model")?;
    let t = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("D={D}, refine converged after {} epochs, {t}", stats.epochs()))
}

// ---------------------------------------------------------------- 5

struct EndToEnd {
    plans: Vec<SplitPlan>,
    hdc_model_dir: Option<PathBuf>,
}

fn run_cohort(root: &Path, seed: u64, separability: f64) -> Result<(SplitPlan, ReportFile, ModelArtifact), String> {
    let mut cfg = RunConfig { seed, ..RunConfig::default() };
    cfg.synth.seed = seed;
    cfg.synth.separability = separability;
    let data = root.join("data");
    generate_dataset(&cfg, &data).map_err(|e| e.to_string())?;
    let set = run_pipeline(&cfg, &data).map_err(|e| e.to_string())?;
    let exp = train_eval(&cfg, &set).map_err(|e| e.to_string())?;
    let plan = exp.report.plan.clone();
    Ok((plan, ReportFile { version: VERSION.into(), config: cfg, report: exp.report }, exp.artifact))
}

fn end_to_end(state: &mut EndToEnd, root: &Path) -> Outcome {
    let start = Instant::now();
    let (plan, file, artifact) = run_cohort(&root.join("sep1"), 7, 1.0)?;
    let model_dir = root.join("sep1/model");
    artifact.save(&model_dir).map_err(|e| e.to_string())?;
    state.hdc_model_dir = Some(model_dir);
    state.plans.push(plan);
    let test = &file.report.test;
    let roc1 = test.roc_auc.unwrap_or(f64::NAN);

    let mut null_rocs = Vec::new();
    for seed in 0..5 {
        let (plan, file, _) = run_cohort(&root.join(format!("sep0-{seed}")), seed, 0.0)?;
        state.plans.push(plan);
        null_rocs.push(file.report.test.roc_auc.unwrap_or(f64::NAN));
    }
    let mean0 = null_rocs.iter().sum::<f64>() / null_rocs.len() as f64;
    let listed: Vec<String> = null_rocs.iter().map(|r| format!("{r:.3}")).collect();
    let detail = format!(
        "sep 1.0: accuracy {:.4}, ROC-AUC {:.4}; sep 0.0 ROC-AUC mean {mean0:.4} over seeds [{}]",
        test.accuracy,
        roc1,
        listed.join(", ")
    );
    ensure(test.accuracy >= 0.90 && roc1 >= 0.90, detail.clone())?;
    ensure((0.45..=0.55).contains(&mean0), detail.clone())?;
    let t = within_budget(start, Duration::from_secs(300)).map_err(|e| format!("{detail}; {e}"))?;
    Ok(format!("{detail}, {t}"))
}

// ---------------------------------------------------------------- 6

fn numeric_grad<M: Parameters + Clone>(model: &M, idx: usize, loss: &dyn Fn(&M) -> f64) -> f64 {
    const EPS: f64 = 1e-4;
    let base = model.flat();
    let (mut plus, mut minus) = (model.clone(), model.clone());
    let mut p = base.clone();
    p[idx] = base[idx] + EPS;
    plus.set_flat(&p).expect("layout");
    p[idx] = base[idx] - EPS;
    minus.set_flat(&p).expect("layout");
    (loss(&plus) - loss(&minus)) / (2.0 * EPS)
}

fn worst_rel_error<M: Parameters + Clone>(model: &M, grad: &M, loss: &dyn Fn(&M) -> f64, seed: u64) -> f64 {
    let g = grad.flat();
    let mut rng = stream(seed, &[6]);
    (0..20)
        .map(|_| {
            let idx = rng.random_range(0..g.len());
            let n = numeric_grad(model, idx, loss);
            let scale = g[idx].abs().max(n.abs());
            if scale < 1e-9 {
                0.0
            } else {
                (g[idx] - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(6, &[]);
    let xs: Vec<ChannelMatrix> = (0..8)
        .map(|_| ChannelMatrix::from_vec(2, 32, (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let ys: Vec<bool> = (0..8).map(|i| i % 3 == 0).collect();

    let cnn = Cnn::init(2, 61);
    let (g, _) = cnn.backward(&xs, &ys).map_err(|e| e.to_string())?;
    let cnn_err = worst_rel_error(&cnn, &g, &|m: &Cnn| m.loss(&xs, &ys).expect("loss"), 1);

    let svm = SvmHead::init(64, SVM_HIDDEN, 62);
    let dropout = Some((DropoutKey { seed: 3, epoch: 0, batch: 0 }, 0.1));
    let (g, _) = svm.backward(&xs, &ys, 1e-4, dropout).map_err(|e| e.to_string())?;
    let svm_err = worst_rel_error(&svm, &g, &|m: &SvmHead| m.loss(&xs, &ys, 1e-4, dropout).expect("loss"), 2);

    let detail = format!("max relative error CNN {cnn_err:.2e}, SVM head {svm_err:.2e}");
    ensure(cnn_err <= 1e-3 && svm_err <= 1e-3, detail.clone())?;
    let t = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("{detail}, {t}"))
}

// ---------------------------------------------------------------- 7

/// Violations counted independently of `SplitPlan::validate`.
fn leakage(plan: &SplitPlan) -> usize {
    let test: BTreeSet<&String> = plan.test.iter().collect();
    let mut bad = 0;
    for fold in &plan.folds {
        let train: BTreeSet<&String> = fold.train.iter().collect();
        bad += fold.validation.iter().filter(|u| train.contains(u)).count();
        bad += fold.train.iter().chain(&fold.validation).filter(|u| test.contains(u)).count();
    }
    bad
}

fn random_plan(seed: u64) -> SplitPlan {
    let mut rng = stream(seed, &[7]);
    loop {
        let n = rng.random_range(6..=24);
        let k = rng.random_range(1..=4);
        let folds = rng.random_range(2..=4);
        let users: Vec<UserSummary> = (0..n)
            .map(|i| UserSummary {
                user_id: format!("p{i}"),
                tac_feature: rng.random_range(0.0..120.0),
                window_count: rng.random_range(1..200),
                intox_window_fraction: rng.random_range(0.0..1.0),
            })
            .collect();
        let clusters: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if let Ok(plan) = build_split_plan(&users, &clusters, k, folds, rng.random()) {
            return plan;
        }
    }
}

fn leakage_free(state: &EndToEnd) -> Outcome {
    let generated: usize = state.plans.iter().map(leakage).sum();
    let random: usize = (0..1000).map(|s| leakage(&random_plan(s))).sum();
    ensure(!state.plans.is_empty(), "no generated plan available")?;
    ensure(generated + random == 0, format!("{generated} violations in generated plans, {random} in random plans"))?;
    Ok(format!("{} generated + 1000 random plans, 0 violations", state.plans.len()))
}

// ---------------------------------------------------------------- 8

fn untrained_cnn_artifact() -> Result<ModelArtifact, String> {
    let cfg = RunConfig { model: ModelKind::Cnn, ..RunConfig::default() };
    let len = cfg.preprocess.window_len().map_err(|e| e.to_string())?;
    let sample = random_windows(8, 16, CHANNELS, len);
    let meta = ModelMeta {
        version: VERSION.into(),
        kind: ModelKind::Cnn,
        channels: CHANNELS,
        window_len: len,
        hidden: None,
        fold: 0,
        threshold: Some(0.5),
        normalizer: fit_normalizer(&sample).map_err(|e| e.to_string())?,
        config: cfg,
    };
    Ok(ModelArtifact { meta, model: TrainedModel::Cnn(Cnn::init(CHANNELS, 8)) })
}

fn benchmark(state: &EndToEnd, root: &Path) -> Outcome {
    let start = Instant::now();
    let hdc_dir = state.hdc_model_dir.clone().ok_or("no trained HDC model")?;
    let hdc = ModelArtifact::load(&hdc_dir).map_err(|e| e.to_string())?;
    let cnn_dir = root.join("cnn-model");
    untrained_cnn_artifact()?.save(&cnn_dir).map_err(|e| e.to_string())?;
    let cnn = ModelArtifact::load(&cnn_dir).map_err(|e| e.to_string())?;
    let cfg = RunConfig::default();
    let h = run_bench(&cfg, &hdc).map_err(|e| e.to_string())?;
    let c = run_bench(&cfg, &cnn).map_err(|e| e.to_string())?;
    let detail = format!(
        "HDC mean {:.4} s (p95 {:.4}), CNN mean {:.4} s (p95 {:.4}) over {} iterations",
        h.mean_seconds, h.p95_seconds, c.mean_seconds, c.p95_seconds, h.iterations
    );
    ensure(h.iterations == 100 && c.iterations == 100, "iteration count")?;
    ensure(h.mean_seconds <= 0.1 && c.mean_seconds <= 0.05, detail.clone())?;
    ensure(h.power == "unavailable", "power field")?;
    let t = within_budget(start, Duration::from_secs(60))?;
    Ok(format!("{detail}, {t}"))
}

// ---------------------------------------------------------------- 9

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable dir") {
            let p = entry.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).expect("prefix").to_path_buf(), fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

fn small_config(model: ModelKind) -> RunConfig {
    let mut cfg = RunConfig { seed: 3, model, ..RunConfig::default() };
    cfg.synth.seed = 3;
    cfg.synth.n_users = 8;
    cfg.synth.sessions_per_user = 4;
    cfg.hdc.dim = 1000;
    cfg.train.epochs = 1;
    cfg
}

fn produce(root: &Path, model: ModelKind) -> Result<(), String> {
    let cfg = small_config(model);
    let e = |e: intox::AppError| e.to_string();
    generate_dataset(&cfg, &root.join("data")).map_err(e)?;
    run_pipeline(&cfg, &root.join("data")).map_err(e)?.save(&root.join("windows")).map_err(e)?;
    let set = WindowSet::load(&root.join("windows")).map_err(e)?;
    let exp = train_eval(&cfg, &set).map_err(e)?;
    let file = ReportFile { version: VERSION.into(), config: cfg, report: exp.report };
    let json = serde_json::to_string_pretty(&file).map_err(|x| x.to_string())? + "\n";
    fs::create_dir_all(root.join("run")).map_err(|x| x.to_string())?;
    fs::write(root.join("run/report.json"), &json).map_err(|x| x.to_string())?;
    exp.artifact.save(&root.join("run/model")).map_err(e)?;
    let reparsed: ReportFile = serde_json::from_str(&json).map_err(|x| x.to_string())?;
    ensure(serde_json::to_string_pretty(&reparsed).map_err(|x| x.to_string())? + "\n" == json, "report JSON round trip")
}

fn predictions_survive_reload(artifact: &ModelArtifact, dir: &Path) -> Result<(), String> {
    artifact.save(dir).map_err(|e| e.to_string())?;
    let loaded = ModelArtifact::load(dir).map_err(|e| e.to_string())?;
    ensure(loaded == *artifact, format!("{} artifact changed on reload", artifact.meta.kind))?;
    for w in random_windows(9, 100, artifact.meta.channels, artifact.meta.window_len) {
        let (a, b) = (artifact.predict(&w).map_err(|e| e.to_string())?, loaded.predict(&w).map_err(|e| e.to_string())?);
        ensure(a.0.to_bits() == b.0.to_bits() && a.1 == b.1, format!("{} prediction changed", artifact.meta.kind))?;
    }
    Ok(())
}

fn determinism(root: &Path) -> Outcome {
    let mut checked = 0;
    for model in [ModelKind::Hdc, ModelKind::Cnn] {
        let (a, b) = (root.join(format!("{model}-a")), root.join(format!("{model}-b")));
        produce(&a, model)?;
        produce(&b, model)?;
        let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
        ensure(fa.len() == fb.len(), "different file sets")?;
        for ((pa, ba), (pb, bb)) in fa.iter().zip(&fb) {
            ensure(pa == pb && ba == bb, format!("{} differs between runs", pa.display()))?;
        }
        checked += fa.len();
        let artifact = ModelArtifact::load(&a.join("run/model")).map_err(|e| e.to_string())?;
        predictions_survive_reload(&artifact, &root.join(format!("{model}-reload")))?;
    }
    let mut svm = untrained_cnn_artifact()?;
    svm.meta.kind = ModelKind::Svm;
    svm.meta.hidden = Some(SVM_HIDDEN);
    svm.meta.threshold = Some(0.0);
    svm.model = TrainedModel::Svm(SvmHead::init(CHANNELS * svm.meta.window_len, SVM_HIDDEN, 10));
    predictions_survive_reload(&svm, &root.join("svm-reload"))?;
    Ok(format!("{checked} files byte-identical across reruns; hdc, cnn, svm reload predictions exact on 100 windows"))
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut state = EndToEnd { plans: Vec::new(), hdc_model_dir: None };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 degenerate-row identities", guarded(degenerate_rows)),
        ("2 metric oracle equivalence", guarded(metric_oracles)),
        ("3 DSP contract", guarded(dsp_contract)),
        ("4 HDC algebra", guarded(hdc_algebra)),
        ("5 end-to-end synthetic learning", guarded(|| end_to_end(&mut state, root))),
        ("6 gradient correctness", guarded(gradients)),
        ("7 leakage-free protocol", guarded(|| leakage_free(&state))),
        ("8 benchmark sanity", guarded(|| benchmark(&state, root))),
        ("9 determinism and round trips", guarded(|| determinism(root))),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
