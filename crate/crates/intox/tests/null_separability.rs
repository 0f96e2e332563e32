//! With indistinguishable classes, every model ranks test windows at chance.
//!
//! The neural models train for a single epoch so the suite stays fast;
//! chance-level ranking does not depend on training length.

use intox::dataset::generate_dataset;
use intox::experiment::train_eval;
use intox::pipeline::run_pipeline;
use intox::{ModelKind, RunConfig};

fn mean_null_auc(model: ModelKind, configure: impl Fn(&mut RunConfig)) -> (f64, Vec<f64>) {
    let mut rocs = Vec::new();
    for seed in 0..5 {
        let mut cfg = RunConfig { seed, model, ..RunConfig::default() };
        cfg.synth.seed = seed;
        cfg.synth.separability = 0.0;
        configure(&mut cfg);
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, dir.path()).unwrap();
        let set = run_pipeline(&cfg, dir.path()).unwrap();
        let exp = train_eval(&cfg, &set).unwrap();
        assert!(exp.report.test.is_bounded());
        rocs.push(exp.report.test.roc_auc.expect("test users hold both classes"));
    }
    (rocs.iter().sum::<f64>() / rocs.len() as f64, rocs)
}

fn reduced(cfg: &mut RunConfig) {
    cfg.train.epochs = 1;
}

#[test]
fn cnn_is_at_chance() {
    let (mean, rocs) = mean_null_auc(ModelKind::Cnn, reduced);
    assert!((0.45..=0.55).contains(&mean), "mean {mean} over {rocs:?}");
}

#[test]
fn svm_is_at_chance() {
    let (mean, rocs) = mean_null_auc(ModelKind::Svm, reduced);
    assert!((0.45..=0.55).contains(&mean), "mean {mean} over {rocs:?}");
}
