//! Preprocessed window container.
//!
//! `windows.bin` layout, all integers little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `TWW1` |
//! | 4 | 4 | u32 channels |
//! | 8 | 4 | u32 window length (samples) |
//! | 12 | 4 | u32 window count `n` |
//! | 16 | n | one label byte per window (0 sober, 1 intoxicated) |
//! | 16 + n | 4 n c l | f32 samples, window-major, then channel, then time |
//!
//! NaN marks heart-rate samples before the first reading of a session.
//! `windows.json` holds the per-window index, per-user summaries, and the
//! configuration that produced the file.

use std::fs;
use std::path::Path;

use intox_core::eval::UserSummary;
use intox_core::ChannelMatrix;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"TWW1";
pub const DATA_FILE: &str = "windows.bin";
pub const INDEX_FILE: &str = "windows.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub user_id: String,
    pub start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PipelineCounts {
    pub users: usize,
    pub sessions_kept: usize,
    pub sessions_dropped: usize,
    pub duplicate_timestamps: usize,
    pub windows: usize,
    pub windows_skipped: usize,
    pub intoxicated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowIndex {
    pub version: String,
    pub config: RunConfig,
    pub channels: Vec<String>,
    pub window_len: usize,
    pub counts: PipelineCounts,
    pub prevalence: f64,
    pub users: Vec<UserSummary>,
    pub windows: Vec<WindowEntry>,
}

/// Windows with their labels, in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub index: WindowIndex,
    pub data: Vec<ChannelMatrix>,
    pub labels: Vec<bool>,
}

pub fn encode_windows(data: &[ChannelMatrix], labels: &[bool]) -> Result<Vec<u8>> {
    let (channels, len) = data.first().map_or((0, 0), |w| (w.rows(), w.cols()));
    if data.len() != labels.len() || data.iter().any(|w| w.rows() != channels || w.cols() != len) {
        return Err(AppError::internal("container", "windows differ in shape or label count"));
    }
    let mut out = Vec::with_capacity(16 + data.len() * (1 + 4 * channels * len));
    out.extend_from_slice(MAGIC);
    for v in [channels, len, data.len()] {
        let v = u32::try_from(v).map_err(|_| AppError::internal("container", "dimension exceeds u32"))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(labels.iter().map(|&l| l as u8));
    for w in data {
        for &v in w.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_windows(bytes: &[u8]) -> Result<(Vec<ChannelMatrix>, Vec<bool>)> {
    let bad = |m: &str| AppError::data("container", m);
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a window container (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (channels, len, count) = (u32_at(4), u32_at(8), u32_at(12));
    let body = count
        .checked_mul(channels * len)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(16 + count))
        .ok_or_else(|| bad("header sizes overflow"))?;
    if bytes.len() != body {
        return Err(bad("file size does not match header"));
    }
    let mut labels = Vec::with_capacity(count);
    for &b in &bytes[16..16 + count] {
        match b {
            0 => labels.push(false),
            1 => labels.push(true),
            _ => return Err(bad("label byte must be 0 or 1")),
        }
    }
    let mut offset = 16 + count;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let values: Vec<f64> = bytes[offset..offset + 4 * channels * len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        offset += 4 * channels * len;
        data.push(ChannelMatrix::from_vec(channels, len, values));
    }
    Ok((data, labels))
}

impl WindowSet {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| AppError::io("container", dir, e))?;
        let bin = encode_windows(&self.data, &self.labels)?;
        let bin_path = dir.join(DATA_FILE);
        fs::write(&bin_path, bin).map_err(|e| AppError::io("container", &bin_path, e))?;
        let json = serde_json::to_string_pretty(&self.index).map_err(|e| AppError::internal("container", e))?;
        let json_path = dir.join(INDEX_FILE);
        fs::write(&json_path, json + "\n").map_err(|e| AppError::io("container", &json_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let json_path = dir.join(INDEX_FILE);
        let text = fs::read_to_string(&json_path).map_err(|e| AppError::io("container", &json_path, e))?;
        let index: WindowIndex =
            serde_json::from_str(&text).map_err(|e| AppError::data("container", format!("{}: {e}", json_path.display())))?;
        let bin_path = dir.join(DATA_FILE);
        let bytes = fs::read(&bin_path).map_err(|e| AppError::io("container", &bin_path, e))?;
        let (data, labels) = decode_windows(&bytes)?;
        if data.len() != index.windows.len() {
            return Err(AppError::data("container", "index and data disagree on the window count"));
        }
        Ok(Self { index, data, labels })
    }
}
