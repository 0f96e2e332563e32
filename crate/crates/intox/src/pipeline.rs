//! Raw CSV directory to labeled window container.
//!
//! Input layout: `<dir>/sensor/<user_id>.csv` with the matching TAC stream
//! at `<dir>/tac/<user_id>.csv`. The user id is the file stem.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use intox_core::dsp::{make_windows, preprocess_session};
use intox_core::eval::UserSummary;
use intox_core::ingest::{label_windows, max_tac_over, segment_sessions, validate_tac};
use intox_core::{ChannelMatrix, SensorSample, TacReading, CHANNEL_NAMES};

use crate::config::{RunConfig, VERSION};
use crate::container::{PipelineCounts, WindowEntry, WindowIndex, WindowSet};
use crate::csvio::{parse_sensor_csv, parse_tac_csv};
use crate::dataset::{SENSOR_DIR, TAC_DIR};
use crate::error::{AppError, Result};

/// `(user_id, sensor path, tac path)` for every sensor file, sorted by id.
pub fn discover_inputs(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let sensor_dir = dir.join(SENSOR_DIR);
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(&sensor_dir) {
        for entry in entries {
            let path = entry.map_err(|e| AppError::io("ingest", &sensor_dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let tac = dir.join(TAC_DIR).join(format!("{stem}.csv"));
            out.push((stem.to_string(), path, tac));
        }
    }
    if out.is_empty() {
        return Err(AppError::data("ingest", format!("no input files in {}", sensor_dir.display())));
    }
    out.sort();
    Ok(out)
}

fn read_streams(sensor: &Path, tac: &Path) -> Result<(Vec<SensorSample>, Vec<TacReading>)> {
    let open = |p: &Path| fs::File::open(p).map_err(|e| AppError::io("ingest", p, e));
    let samples =
        parse_sensor_csv(open(sensor)?).map_err(|e| AppError::data("ingest", format!("{}: {e}", sensor.display())))?;
    if !tac.exists() {
        return Err(AppError::data("ingest", format!("missing TAC file {}", tac.display())));
    }
    let readings =
        parse_tac_csv(open(tac)?).map_err(|e| AppError::data("ingest", format!("{}: {e}", tac.display())))?;
    validate_tac(&readings).map_err(|e| AppError::data("ingest", format!("{}: {e}", tac.display())))?;
    Ok((samples, readings))
}

/// Values as stored in the container, so a loaded set equals the one built
/// in memory.
fn to_f32_grid(mut w: ChannelMatrix) -> ChannelMatrix {
    for v in w.as_mut_slice() {
        *v = *v as f32 as f64;
    }
    w
}

/// One user's labeled windows, in time order.
#[derive(Debug, Default)]
pub struct UserWindows {
    pub data: Vec<ChannelMatrix>,
    pub labels: Vec<bool>,
    pub entries: Vec<WindowEntry>,
    /// `None` when the user has no labeled window.
    pub summary: Option<UserSummary>,
}

/// Segments, preprocesses, windows and labels one user's streams.
pub fn process_user(
    cfg: &RunConfig,
    user_id: &str,
    samples: &[SensorSample],
    tac: &[TacReading],
    counts: &mut PipelineCounts,
) -> Result<UserWindows> {
    let seg = segment_sessions(user_id, samples, &cfg.sessions);
    counts.sessions_kept += seg.sessions.len();
    counts.sessions_dropped += seg.dropped.len();
    counts.duplicate_timestamps += seg.duplicate_timestamps;
    let stage = |e: &dyn std::fmt::Display| AppError::data("preprocess", format!("{user_id}: {e}"));

    let mut out = UserWindows::default();
    let mut session_max_tac = Vec::new();
    for session in &seg.sessions {
        let channels = preprocess_session(session, &cfg.filter, &cfg.preprocess).map_err(|e| stage(&e))?;
        let windows = make_windows(&channels, session.start(), &cfg.preprocess).map_err(|e| stage(&e))?;
        let starts: Vec<f64> = windows.iter().map(|(s, _)| *s).collect();
        let labels = label_windows(&starts, cfg.preprocess.window_seconds, tac, cfg.tac_threshold)
            .map_err(|e| AppError::data("label", format!("{user_id}: {e}")))?;
        counts.windows_skipped += labels.skipped;
        for ((start, w), label) in windows.into_iter().zip(labels.labels) {
            let Some(label) = label else { continue };
            out.data.push(to_f32_grid(w));
            out.labels.push(label);
            out.entries.push(WindowEntry { user_id: user_id.to_string(), start });
        }
        if let Some(m) = max_tac_over(tac, session.start(), session.end()) {
            session_max_tac.push(m);
        }
    }

    out.summary = (!out.data.is_empty()).then(|| {
        let intox = out.labels.iter().filter(|&&l| l).count();
        let tac_feature = if session_max_tac.is_empty() {
            0.0
        } else {
            session_max_tac.iter().sum::<f64>() / session_max_tac.len() as f64
        };
        UserSummary {
            user_id: user_id.to_string(),
            tac_feature,
            window_count: out.data.len(),
            intox_window_fraction: intox as f64 / out.data.len() as f64,
        }
    });
    Ok(out)
}

/// Runs the whole chain over an input directory. Users without any labeled
/// window are counted but left out of the summaries.
pub fn run_pipeline(cfg: &RunConfig, input: &Path) -> Result<WindowSet> {
    cfg.validate()?;
    let inputs = discover_inputs(input)?;
    let mut counts = PipelineCounts { users: inputs.len(), ..PipelineCounts::default() };
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut windows = Vec::new();
    let mut users = Vec::new();
    let mut seen = BTreeMap::new();
    for (user_id, sensor, tac) in &inputs {
        if seen.insert(user_id.clone(), ()).is_some() {
            return Err(AppError::data("ingest", format!("duplicate user id {user_id}")));
        }
        let (samples, readings) = read_streams(sensor, tac)?;
        let user = process_user(cfg, user_id, &samples, &readings, &mut counts)?;
        data.extend(user.data);
        labels.extend(user.labels);
        windows.extend(user.entries);
        users.extend(user.summary);
    }
    counts.windows = data.len();
    counts.intoxicated = labels.iter().filter(|&&l| l).count();
    let prevalence = if data.is_empty() { 0.0 } else { counts.intoxicated as f64 / data.len() as f64 };
    let index = WindowIndex {
        version: VERSION.to_string(),
        config: cfg.clone(),
        channels: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        window_len: cfg.preprocess.window_len().map_err(|e| AppError::usage("config", e))?,
        counts,
        prevalence,
        users,
        windows,
    };
    Ok(WindowSet { index, data, labels })
}

pub fn summary_line(set: &WindowSet) -> String {
    let c = &set.index.counts;
    format!(
        "users {} | sessions kept {} dropped {} | duplicate timestamps {} | windows {} (unlabeled {}) | intoxicated {} | prevalence {:.6}",
        c.users,
        c.sessions_kept,
        c.sessions_dropped,
        c.duplicate_timestamps,
        c.windows,
        c.windows_skipped,
        c.intoxicated,
        set.index.prevalence
    )
}
