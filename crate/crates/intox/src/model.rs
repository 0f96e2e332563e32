//! Trained model artifacts: `model.bin` plus a `model.json` sidecar.
//!
//! HDC binary (`THD1`), little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `THD1` | 4 bytes |
//! | format version (1) | u32 |
//! | dim, levels, channels | u32 each |
//! | item-memory seed | u64 |
//! | alpha | f64 |
//! | refine epochs | u32 |
//! | per channel: range lo, hi | f64, f64 |
//! | per class (sober, intoxicated): count, then `dim` accumulators | u64, i64 × dim |
//!
//! Keys, levels and the tie vector are regenerated from the seed.
//!
//! Neural binary (`TNN1`): magic, u32 format version, u32 tensor count, then
//! per tensor a u32 name length, the UTF-8 name, a u32 element count and the
//! f32 values. Parameters live on the f32 grid, so the file is exact.

use std::fs;
use std::path::Path;

use intox_core::dsp::Normalizer;
use intox_core::hdc::{HdcConfig, HdcModel, ItemMemory};
use intox_core::nn::{Cnn, Parameters, SvmHead};
use intox_core::ChannelMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig};
use crate::error::{AppError, Result};

pub const HDC_MAGIC: &[u8; 4] = b"THD1";
pub const NN_MAGIC: &[u8; 4] = b"TNN1";
const FORMAT_VERSION: u32 = 1;
pub const BIN_FILE: &str = "model.bin";
pub const META_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Hdc(HdcModel),
    Cnn(Cnn),
    Svm(SvmHead),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Hdc(_) => ModelKind::Hdc,
            TrainedModel::Cnn(_) => ModelKind::Cnn,
            TrainedModel::Svm(_) => ModelKind::Svm,
        }
    }

    /// Score of a normalized window: similarity difference for HDC,
    /// probability for the CNN, margin for the SVM head.
    pub fn score(&self, window: &ChannelMatrix) -> Result<f64> {
        let err = |e: &dyn std::fmt::Display| AppError::data("inference", e);
        match self {
            TrainedModel::Hdc(m) => m.predict(window).map(|p| p.score).map_err(|e| err(&e)),
            TrainedModel::Cnn(m) => m.forward(window).map_err(|e| err(&e)),
            TrainedModel::Svm(m) => m.score(window).map_err(|e| err(&e)),
        }
    }
}

/// Intoxicated when `score >= threshold`; without a threshold, when the
/// score is positive.
pub fn decide(score: f64, threshold: Option<f64>) -> bool {
    match threshold {
        Some(t) => score >= t,
        None => score > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub version: String,
    pub kind: ModelKind,
    pub channels: usize,
    pub window_len: usize,
    /// Hidden width of the SVM head.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hidden: Option<usize>,
    pub fold: usize,
    pub threshold: Option<f64>,
    pub normalizer: Normalizer,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub meta: ModelMeta,
    pub model: TrainedModel,
}

impl ModelArtifact {
    /// Normalizes a preprocessed window and returns `(score, intoxicated)`.
    pub fn predict(&self, window: &ChannelMatrix) -> Result<(f64, bool)> {
        let x = self.meta.normalizer.apply(window).map_err(|e| AppError::data("inference", e))?;
        let s = self.model.score(&x)?;
        Ok((s, decide(s, self.meta.threshold)))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| AppError::io("model", dir, e))?;
        let bin = match &self.model {
            TrainedModel::Hdc(m) => encode_hdc(m)?,
            TrainedModel::Cnn(m) => encode_nn(m),
            TrainedModel::Svm(m) => encode_nn(m),
        };
        let bin_path = dir.join(BIN_FILE);
        fs::write(&bin_path, bin).map_err(|e| AppError::io("model", &bin_path, e))?;
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| AppError::internal("model", e))?;
        let meta_path = dir.join(META_FILE);
        fs::write(&meta_path, meta + "\n").map_err(|e| AppError::io("model", &meta_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(|e| AppError::io("model", &meta_path, e))?;
        let meta: ModelMeta =
            serde_json::from_str(&text).map_err(|e| AppError::data("model", format!("{}: {e}", meta_path.display())))?;
        let bin_path = dir.join(BIN_FILE);
        let bytes = fs::read(&bin_path).map_err(|e| AppError::io("model", &bin_path, e))?;
        let model = match meta.kind {
            ModelKind::Hdc => TrainedModel::Hdc(decode_hdc(&bytes)?),
            ModelKind::Cnn => {
                let mut m = Cnn::zeros(meta.channels);
                decode_nn(&bytes, &mut m)?;
                TrainedModel::Cnn(m)
            }
            ModelKind::Svm => {
                let hidden = meta.hidden.ok_or_else(|| AppError::data("model", "svm metadata lacks `hidden`"))?;
                let mut m = SvmHead::zeros(meta.channels * meta.window_len, hidden);
                decode_nn(&bytes, &mut m)?;
                TrainedModel::Svm(m)
            }
        };
        Ok(Self { meta, model })
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| AppError::internal("model", "value exceeds u32"))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode_hdc(m: &HdcModel) -> Result<Vec<u8>> {
    let mem = m.memory();
    let ranges = mem.ranges().ok_or_else(|| AppError::internal("model", "HDC ranges are not fitted"))?;
    let mut out = Vec::new();
    out.extend_from_slice(HDC_MAGIC);
    for v in [FORMAT_VERSION as usize, mem.dim(), mem.level_count(), mem.channels()] {
        put_u32(&mut out, v)?;
    }
    out.extend_from_slice(&mem.seed().to_le_bytes());
    out.extend_from_slice(&m.config().alpha.to_le_bytes());
    put_u32(&mut out, m.config().refine_epochs)?;
    for &(lo, hi) in ranges {
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    let counts = m.counts();
    for class in 0..2 {
        out.extend_from_slice(&counts[class].to_le_bytes());
        for &a in &m.accumulators()[class] {
            out.extend_from_slice(&a.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| AppError::data("model", "file is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(AppError::data("model", "trailing bytes after model data"));
        }
        Ok(())
    }
}

fn magic_and_version(c: &mut Cursor<'_>, magic: &[u8; 4]) -> Result<()> {
    if c.take(4)? != magic {
        return Err(AppError::data("model", "bad magic"));
    }
    let v = c.u32()?;
    if v != FORMAT_VERSION as usize {
        return Err(AppError::data("model", format!("unsupported format version {v}")));
    }
    Ok(())
}

pub fn decode_hdc(bytes: &[u8]) -> Result<HdcModel> {
    let mut c = Cursor { bytes, pos: 0 };
    magic_and_version(&mut c, HDC_MAGIC)?;
    let (dim, levels, channels) = (c.u32()?, c.u32()?, c.u32()?);
    let seed = c.u64()?;
    let alpha = c.f64()?;
    let refine_epochs = c.u32()?;
    let mut ranges = Vec::with_capacity(channels);
    for _ in 0..channels {
        ranges.push((c.f64()?, c.f64()?));
    }
    let mut counts = [0u64; 2];
    let mut acc: [Vec<i64>; 2] = [Vec::with_capacity(dim), Vec::with_capacity(dim)];
    for class in 0..2 {
        counts[class] = c.u64()?;
        for _ in 0..dim {
            acc[class].push(c.i64()?);
        }
    }
    c.finish()?;
    let err = |e: intox_core::hdc::HdcError| AppError::data("model", e);
    let config = HdcConfig { dim, levels, alpha, refine_epochs };
    let mut memory = ItemMemory::new(channels, dim, levels, seed).map_err(err)?;
    memory.set_ranges(ranges).map_err(err)?;
    HdcModel::from_parts(config, memory, acc, counts).map_err(err)
}

pub fn encode_nn<M: Parameters>(m: &M) -> Vec<u8> {
    let tensors = m.tensors();
    let mut out = Vec::new();
    out.extend_from_slice(NN_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, values) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for &v in values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Fills `m` from a `TNN1` file whose tensor names and sizes must match.
pub fn decode_nn<M: Parameters>(bytes: &[u8], m: &mut M) -> Result<()> {
    let mut c = Cursor { bytes, pos: 0 };
    magic_and_version(&mut c, NN_MAGIC)?;
    let count = c.u32()?;
    let mut tensors = m.tensors_mut();
    if count != tensors.len() {
        return Err(AppError::data("model", format!("{count} tensors, expected {}", tensors.len())));
    }
    for (name, values) in tensors.iter_mut() {
        let len = c.u32()?;
        let got = c.take(len)?;
        if got != name.as_bytes() {
            return Err(AppError::data("model", format!("expected tensor `{name}`")));
        }
        let n = c.u32()?;
        if n != values.len() {
            return Err(AppError::data("model", format!("tensor `{name}` has {n} values, expected {}", values.len())));
        }
        for v in values.iter_mut() {
            *v = c.f32()? as f64;
        }
    }
    c.finish()
}
