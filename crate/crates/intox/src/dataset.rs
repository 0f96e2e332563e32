//! Synthetic dataset directories.
//!
//! ```text
//! <dir>/sensor/<user_id>.csv
//! <dir>/tac/<user_id>.csv
//! <dir>/manifest.json
//! ```
//!
//! The manifest lists every file with its SHA-256, plus the planned window
//! counts and the cohort prevalence.

use std::fs;
use std::path::{Path, PathBuf};

use intox_core::synth::{generate_user, UserData};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, VERSION};
use crate::csvio::{write_sensor_csv, write_tac_csv};
use crate::error::{AppError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SENSOR_DIR: &str = "sensor";
pub const TAC_DIR: &str = "tac";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the dataset directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestUser {
    pub user_id: String,
    pub sensor: FileEntry,
    pub tac: FileEntry,
    pub sessions: usize,
    pub episodes: usize,
    pub windows: usize,
    pub intoxicated_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub prevalence_target: f64,
    /// Intoxicated fraction over all planned windows.
    pub prevalence: f64,
    pub users: Vec<ManifestUser>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(root: &Path, rel: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = root.join(rel);
    fs::write(&path, bytes).map_err(|e| AppError::io("synth", &path, e))?;
    Ok(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 })
}

fn render(user: &UserData) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut sensor = Vec::new();
    write_sensor_csv(&mut sensor, &user.samples).map_err(|e| AppError::internal("synth", e))?;
    let mut tac = Vec::new();
    write_tac_csv(&mut tac, &user.tac).map_err(|e| AppError::internal("synth", e))?;
    Ok((sensor, tac))
}

/// Generates every user of `cfg.synth` into `dir`. Users are generated on
/// separate threads; the output does not depend on scheduling.
pub fn generate_dataset(cfg: &RunConfig, dir: &Path) -> Result<Manifest> {
    let synth = &cfg.synth;
    synth.validate().map_err(|e| AppError::usage("synth", e))?;
    for sub in [SENSOR_DIR, TAC_DIR] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| AppError::io("synth", &p, e))?;
    }
    let users: Vec<Result<UserData>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..synth.n_users)
            .map(|i| s.spawn(move || generate_user(synth, i).map_err(|e| AppError::data("synth", e))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(AppError::internal("synth", "generator thread panicked"))))
            .collect()
    });

    let mut entries = Vec::with_capacity(users.len());
    let (mut windows, mut intoxicated) = (0usize, 0usize);
    for user in users {
        let user = user?;
        let (sensor, tac) = render(&user)?;
        let sensor = write_file(dir, &format!("{SENSOR_DIR}/{}.csv", user.user_id), &sensor)?;
        let tac = write_file(dir, &format!("{TAC_DIR}/{}.csv", user.user_id), &tac)?;
        windows += user.intox_windows + user.sober_windows;
        intoxicated += user.intox_windows;
        entries.push(ManifestUser {
            user_id: user.user_id.clone(),
            sensor,
            tac,
            sessions: user.sessions.len(),
            episodes: user.episodes.len(),
            windows: user.intox_windows + user.sober_windows,
            intoxicated_windows: user.intox_windows,
        });
    }
    let manifest = Manifest {
        version: VERSION.to_string(),
        config: cfg.clone(),
        prevalence_target: synth.prevalence,
        prevalence: if windows > 0 { intoxicated as f64 / windows as f64 } else { 0.0 },
        users: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| AppError::internal("synth", e))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| AppError::io("synth", &path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| AppError::io("manifest", &path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::data("manifest", format!("{}: {e}", path.display())))
}

/// Files whose size or hash no longer matches the manifest.
pub fn verify_manifest(dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>> {
    let mut bad = Vec::new();
    for user in &manifest.users {
        for entry in [&user.sensor, &user.tac] {
            let path = dir.join(&entry.path);
            let bytes = fs::read(&path).map_err(|e| AppError::io("manifest", &path, e))?;
            if bytes.len() as u64 != entry.bytes || sha256_hex(&bytes) != entry.sha256 {
                bad.push(path);
            }
        }
    }
    Ok(bad)
}
