//! Run configuration: module defaults, optionally overridden by a JSON file,
//! then by command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use intox_core::dsp::{FilterSpec, PreprocessConfig};
use intox_core::eval::{KMeansConfig, DEFAULT_THRESHOLD_STEP};
use intox_core::hdc::HdcConfig;
use intox_core::ingest::{SessionRules, DEFAULT_TAC_THRESHOLD};
use intox_core::nn::TrainConfig;
use intox_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Hdc,
    Cnn,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Hdc => "hdc",
            ModelKind::Cnn => "cnn",
            ModelKind::Svm => "svm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hdc" => Ok(ModelKind::Hdc),
            "cnn" => Ok(ModelKind::Cnn),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!("unknown model `{other}` (expected hdc, cnn or svm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub iterations: usize,
    pub warmup: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { iterations: 100, warmup: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for clustering, fold assignment and model initialization.
    pub seed: u64,
    pub model: ModelKind,
    pub sessions: SessionRules,
    pub tac_threshold: f64,
    pub filter: FilterSpec,
    pub preprocess: PreprocessConfig,
    pub hdc: HdcConfig,
    pub train: TrainConfig,
    pub kmeans: KMeansConfig,
    pub folds: usize,
    pub threshold_step: f64,
    pub bench: BenchConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: ModelKind::Hdc,
            sessions: SessionRules::default(),
            tac_threshold: DEFAULT_TAC_THRESHOLD,
            filter: FilterSpec::default(),
            preprocess: PreprocessConfig::default(),
            hdc: HdcConfig::default(),
            train: TrainConfig::default(),
            kmeans: KMeansConfig::default(),
            folds: 3,
            threshold_step: DEFAULT_THRESHOLD_STEP,
            bench: BenchConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the JSON file, if any. Unknown keys are errors.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io("config", path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::usage("config", format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |e: &dyn fmt::Display| AppError::usage("config", e);
        self.hdc.validate().map_err(|e| err(&e))?;
        self.train.validate().map_err(|e| err(&e))?;
        self.synth.validate().map_err(|e| err(&e))?;
        self.preprocess.window_len().map_err(|e| err(&e))?;
        self.preprocess.hop_len().map_err(|e| err(&e))?;
        if !(self.sessions.gap_threshold > 0.0) {
            return Err(err(&"sessions.gap_threshold must be positive"));
        }
        if !(self.tac_threshold.is_finite() && self.tac_threshold >= 0.0) {
            return Err(err(&"tac_threshold must be a non-negative number"));
        }
        if self.folds < 2 {
            return Err(err(&"folds must be at least 2"));
        }
        if !(self.threshold_step > 0.0) {
            return Err(err(&"threshold_step must be positive"));
        }
        if self.bench.iterations == 0 {
            return Err(err(&"bench.iterations must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
