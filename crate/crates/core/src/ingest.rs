//! Sensor samples, TAC readings, session segmentation, and window labeling.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::ChannelMatrix;

/// Nominal smartwatch IMU sampling rate.
pub const NOMINAL_RATE_HZ: f64 = 50.0;
/// TAC level above which a window counts as intoxicated, in µg/L.
pub const DEFAULT_TAC_THRESHOLD: f64 = 35.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("sample at t={t}: {reason}")]
    InvalidSample { t: f64, reason: &'static str },
    #[error("TAC reading {index}: {reason}")]
    InvalidTac { index: usize, reason: &'static str },
    #[error("cannot label windows without TAC readings")]
    NoTacReadings,
}

/// One timestamped wearable reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    /// Seconds since the stream epoch.
    pub t: f64,
    /// Acceleration in g (x, y, z).
    pub accel: [f64; 3],
    /// Angular velocity in rad/s (x, y, z).
    pub gyro: [f64; 3],
    /// Heart rate in bpm. Watches report it far less often than the IMU.
    pub hr: Option<f64>,
}

impl SensorSample {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |reason| Err(IngestError::InvalidSample { t: self.t, reason });
        if !self.t.is_finite() || self.t < 0.0 {
            return bad("timestamp must be finite and non-negative");
        }
        if self.accel.iter().chain(&self.gyro).any(|v| !v.is_finite()) {
            return bad("accelerometer and gyroscope values must be finite");
        }
        if let Some(hr) = self.hr {
            if !(hr > 20.0 && hr < 260.0) {
                return bad("heart rate must lie in (20, 260) bpm");
            }
        }
        Ok(())
    }
}

/// One transdermal alcohol concentration reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TacReading {
    pub t: f64,
    /// µg/L.
    pub tac: f64,
}

/// Checks that a TAC stream is strictly increasing in time with finite,
/// non-negative values.
pub fn validate_tac(readings: &[TacReading]) -> Result<(), IngestError> {
    for (index, r) in readings.iter().enumerate() {
        if !r.t.is_finite() || !r.tac.is_finite() || r.tac < 0.0 {
            return Err(IngestError::InvalidTac {
                index,
                reason: "time and value must be finite, value non-negative",
            });
        }
        if index > 0 && readings[index - 1].t >= r.t {
            return Err(IngestError::InvalidTac {
                index,
                reason: "timestamps must be strictly increasing",
            });
        }
    }
    Ok(())
}

/// A gap-free run of samples for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub user_id: String,
    pub samples: Vec<SensorSample>,
    pub sample_rate_nominal: f64,
}

impl Session {
    pub fn start(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionRules {
    /// Largest tolerated inter-sample gap, seconds.
    pub gap_threshold: f64,
    /// Sessions must last strictly longer than this, seconds.
    pub min_duration: f64,
}

impl Default for SessionRules {
    fn default() -> Self {
        Self {
            gap_threshold: 0.5,
            min_duration: 60.0,
        }
    }
}

/// A contiguous run rejected by segmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedRun {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segmentation {
    pub sessions: Vec<Session>,
    pub dropped: Vec<DroppedRun>,
    /// Samples discarded because they repeated an earlier timestamp.
    pub duplicate_timestamps: usize,
}

/// Splits a sample stream at gaps wider than `rules.gap_threshold` and keeps
/// the runs lasting longer than `rules.min_duration`.
///
/// Input order does not matter; samples are sorted by time first. Samples
/// sharing a timestamp with their predecessor are dropped so every session
/// is strictly increasing.
pub fn segment_sessions(user_id: &str, samples: &[SensorSample], rules: &SessionRules) -> Segmentation {
    let mut sorted: Vec<SensorSample> = samples.to_vec();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut out = Segmentation::default();
    let mut run: Vec<SensorSample> = Vec::new();
    let flush = |run: &mut Vec<SensorSample>, out: &mut Segmentation| {
        if run.is_empty() {
            return;
        }
        let start = run[0].t;
        let end = run[run.len() - 1].t;
        if end - start > rules.min_duration {
            out.sessions.push(Session {
                user_id: String::from(user_id),
                samples: core::mem::take(run),
                sample_rate_nominal: NOMINAL_RATE_HZ,
            });
        } else {
            out.dropped.push(DroppedRun {
                start,
                end,
                samples: run.len(),
            });
            run.clear();
        }
    };

    for s in sorted {
        if let Some(last) = run.last() {
            let dt = s.t - last.t;
            if dt <= 0.0 {
                out.duplicate_timestamps += 1;
                continue;
            }
            if dt > rules.gap_threshold {
                flush(&mut run, &mut out);
            }
        }
        run.push(s);
    }
    flush(&mut run, &mut out);
    out
}

/// TAC value in force at time `t` under a zero-order hold, or `None` before
/// the first reading. `readings` must be time-sorted.
pub fn tac_at(readings: &[TacReading], t: f64) -> Option<f64> {
    let idx = readings.partition_point(|r| r.t <= t);
    idx.checked_sub(1).map(|i| readings[i].tac)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowLabels {
    /// One entry per input window; `None` for windows skipped for lack of
    /// TAC coverage.
    pub labels: Vec<Option<bool>>,
    pub skipped: usize,
}

/// Labels each window intoxicated iff the held TAC value at the window end
/// strictly exceeds `threshold_ugl`.
pub fn label_windows(
    window_starts: &[f64],
    window_seconds: f64,
    tac: &[TacReading],
    threshold_ugl: f64,
) -> Result<WindowLabels, IngestError> {
    if tac.is_empty() {
        return Err(IngestError::NoTacReadings);
    }
    let mut out = WindowLabels::default();
    for &start in window_starts {
        match tac_at(tac, start + window_seconds) {
            Some(v) => out.labels.push(Some(v > threshold_ugl)),
            None => {
                out.labels.push(None);
                out.skipped += 1;
            }
        }
    }
    Ok(out)
}

/// Largest held TAC value over `[start, end]`.
pub fn max_tac_over(readings: &[TacReading], start: f64, end: f64) -> Option<f64> {
    let first = tac_at(readings, start);
    let inside = readings
        .iter()
        .filter(|r| r.t > start && r.t <= end)
        .map(|r| r.tac);
    first.into_iter().chain(inside).reduce(f64::max)
}

/// A preprocessed window with its binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub user_id: String,
    pub channels: ChannelMatrix,
    /// `true` = intoxicated.
    pub label: bool,
    pub window_start: f64,
}
