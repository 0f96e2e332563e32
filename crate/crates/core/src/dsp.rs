//! Preprocessing chain: FIR low-pass, 50→40 Hz resampling, fixed-length
//! windowing, and per-channel z-score normalization.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Session;

/// Channel rows in every window: accel xyz, gyro xyz, heart rate.
pub const CHANNELS: usize = 7;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz", "hr"];
pub const HR_CHANNEL: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("tap count {0} must be odd and at least 3")]
    BadTapCount(usize),
    #[error("signal of length {len} is shorter than the {taps}-tap filter")]
    SignalTooShort { len: usize, taps: usize },
    #[error("resampling needs at least 2 input samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid sample rates: input {input_hz} Hz, output {output_hz} Hz")]
    BadRates { input_hz: f64, output_hz: f64 },
    #[error("window of {window_seconds} s at {rate_hz} Hz is not a whole number of samples")]
    FractionalWindow { window_seconds: f64, rate_hz: f64 },
    #[error("cannot fit normalizer on an empty training set")]
    EmptyTrainingSet,
    #[error("shape mismatch: expected {expected_rows} rows, got {rows}")]
    Shape { expected_rows: usize, rows: usize },
}

/// Dense row-major matrix with one row per channel and one column per time
/// step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChannelMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Copy of columns `[start, start + len)`.
    pub fn columns(&self, start: usize, len: usize) -> ChannelMatrix {
        let mut out = ChannelMatrix::zeros(self.rows, len);
        for r in 0..self.rows {
            out.row_mut(r)
                .copy_from_slice(&self.row(r)[start..start + len]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub input_rate_hz: f64,
    pub taps: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            cutoff_hz: 5.0,
            input_rate_hz: 50.0,
            taps: 101,
        }
    }
}

/// Hamming-windowed sinc low-pass coefficients scaled to unit DC gain.
pub fn design_lowpass(spec: &FilterSpec) -> Result<Vec<f64>, DspError> {
    let nyquist_hz = spec.input_rate_hz / 2.0;
    if !(spec.cutoff_hz > 0.0 && spec.cutoff_hz < nyquist_hz) {
        return Err(DspError::CutoffOutOfRange {
            cutoff_hz: spec.cutoff_hz,
            nyquist_hz,
        });
    }
    if spec.taps < 3 || spec.taps % 2 == 0 {
        return Err(DspError::BadTapCount(spec.taps));
    }
    let fc = spec.cutoff_hz / spec.input_rate_hz;
    let m = (spec.taps - 1) as f64;
    let center = (spec.taps - 1) / 2;
    let mut h: Vec<f64> = (0..spec.taps)
        .map(|n| {
            let x = n as f64 - m / 2.0;
            let sinc = if n == center {
                2.0 * fc
            } else {
                libm::sin(2.0 * PI * fc * x) / (PI * x)
            };
            let w = 0.54 - 0.46 * libm::cos(2.0 * PI * n as f64 / m);
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for c in &mut h {
        *c /= sum;
    }
    // Absorb the rounding residue into the center tap.
    let off_center: f64 = h
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != center)
        .map(|(_, c)| c)
        .sum();
    h[center] = 1.0 - off_center;
    Ok(h)
}

/// Zero-phase FIR filtering of `signal` by odd-length symmetric `coeffs`.
///
/// The signal is mirror-padded by half the filter length on each side and
/// the centered ("same") convolution is returned, so the output aligns with
/// the input sample for sample.
pub fn filter_signal(signal: &[f64], coeffs: &[f64]) -> Result<Vec<f64>, DspError> {
    let taps = coeffs.len();
    if taps < 3 || taps % 2 == 0 {
        return Err(DspError::BadTapCount(taps));
    }
    if signal.len() < taps {
        return Err(DspError::SignalTooShort {
            len: signal.len(),
            taps,
        });
    }
    let half = taps / 2;
    let n = signal.len();
    let mut padded = Vec::with_capacity(n + 2 * half);
    padded.extend((1..=half).rev().map(|k| signal[k]));
    padded.extend_from_slice(signal);
    padded.extend((1..=half).map(|k| signal[n - 1 - k]));

    Ok((0..n)
        .map(|i| {
            padded[i..i + taps]
                .iter()
                .zip(coeffs.iter().rev())
                .map(|(x, c)| x * c)
                .sum()
        })
        .collect())
}

/// Number of output samples when resampling `len` input samples.
pub fn resampled_len(len: usize, input_rate_hz: f64, output_rate_hz: f64) -> usize {
    if len == 0 {
        return 0;
    }
    // The epsilon keeps exact products like 999 * 40 / 50 = 799.2 from
    // landing a hair under an integer boundary.
    libm::floor((len - 1) as f64 * output_rate_hz / input_rate_hz + 1e-9) as usize + 1
}

fn check_rates(input_rate_hz: f64, output_rate_hz: f64) -> Result<(), DspError> {
    if !(input_rate_hz > 0.0 && output_rate_hz > 0.0)
        || !input_rate_hz.is_finite()
        || !output_rate_hz.is_finite()
    {
        return Err(DspError::BadRates {
            input_hz: input_rate_hz,
            output_hz: output_rate_hz,
        });
    }
    Ok(())
}

/// Linear interpolation of a uniformly sampled signal onto an
/// `output_rate_hz` grid starting at the first input sample.
pub fn resample_to(signal: &[f64], input_rate_hz: f64, output_rate_hz: f64) -> Result<Vec<f64>, DspError> {
    check_rates(input_rate_hz, output_rate_hz)?;
    if signal.len() < 2 {
        return Err(DspError::TooFewSamples(signal.len()));
    }
    let out_len = resampled_len(signal.len(), input_rate_hz, output_rate_hz);
    let step = input_rate_hz / output_rate_hz;
    let last = signal.len() - 1;
    Ok((0..out_len)
        .map(|k| {
            let pos = k as f64 * step;
            let i = (libm::floor(pos) as usize).min(last);
            if i == last {
                return signal[last];
            }
            let frac = pos - i as f64;
            signal[i] + frac * (signal[i + 1] - signal[i])
        })
        .collect())
}

/// Sample-and-hold resampling for sparsely reported channels. Each output
/// sample takes the input sample at or just before its time, so absences
/// (`None`) stay absent; they come out as NaN.
pub fn resample_hold(signal: &[Option<f64>], input_rate_hz: f64, output_rate_hz: f64) -> Result<Vec<f64>, DspError> {
    check_rates(input_rate_hz, output_rate_hz)?;
    if signal.len() < 2 {
        return Err(DspError::TooFewSamples(signal.len()));
    }
    let out_len = resampled_len(signal.len(), input_rate_hz, output_rate_hz);
    let step = input_rate_hz / output_rate_hz;
    Ok((0..out_len)
        .map(|k| {
            let i = (libm::floor(k as f64 * step + 1e-9) as usize).min(signal.len() - 1);
            signal[i].unwrap_or(f64::NAN)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub output_rate_hz: f64,
    pub window_seconds: f64,
    pub hop_seconds: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            output_rate_hz: 40.0,
            window_seconds: 20.0,
            hop_seconds: 20.0,
        }
    }
}

fn whole_samples(seconds: f64, rate_hz: f64) -> Result<usize, DspError> {
    let n = seconds * rate_hz;
    let r = libm::round(n);
    if r < 1.0 || libm::fabs(n - r) > 1e-9 {
        return Err(DspError::FractionalWindow {
            window_seconds: seconds,
            rate_hz,
        });
    }
    Ok(r as usize)
}

impl PreprocessConfig {
    pub fn window_len(&self) -> Result<usize, DspError> {
        whole_samples(self.window_seconds, self.output_rate_hz)
    }

    pub fn hop_len(&self) -> Result<usize, DspError> {
        whole_samples(self.hop_seconds, self.output_rate_hz)
    }
}

/// Cuts `channels` (sampled at `config.output_rate_hz`, first column at
/// `start_time`) into full windows. A trailing partial window is dropped.
pub fn make_windows(
    channels: &ChannelMatrix,
    start_time: f64,
    config: &PreprocessConfig,
) -> Result<Vec<(f64, ChannelMatrix)>, DspError> {
    let len = config.window_len()?;
    let hop = config.hop_len()?;
    if channels.cols() < len {
        return Ok(Vec::new());
    }
    let count = (channels.cols() - len) / hop + 1;
    Ok((0..count)
        .map(|w| {
            let first = w * hop;
            (
                start_time + first as f64 / config.output_rate_hz,
                channels.columns(first, len),
            )
        })
        .collect())
}

/// Runs a session through low-pass filtering and resampling, producing a
/// `CHANNELS`-row matrix at the output rate. Heart rate is carried by
/// sample-and-hold with NaN marking absent readings.
pub fn preprocess_session(
    session: &Session,
    filter: &FilterSpec,
    config: &PreprocessConfig,
) -> Result<ChannelMatrix, DspError> {
    if config.output_rate_hz > filter.input_rate_hz {
        return Err(DspError::BadRates {
            input_hz: filter.input_rate_hz,
            output_hz: config.output_rate_hz,
        });
    }
    let coeffs = design_lowpass(filter)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(CHANNELS);
    for axis in 0..6 {
        let raw: Vec<f64> = session
            .samples
            .iter()
            .map(|s| if axis < 3 { s.accel[axis] } else { s.gyro[axis - 3] })
            .collect();
        let smooth = filter_signal(&raw, &coeffs)?;
        rows.push(resample_to(&smooth, filter.input_rate_hz, config.output_rate_hz)?);
    }
    let hr: Vec<Option<f64>> = session.samples.iter().map(|s| s.hr).collect();
    rows.push(resample_hold(&hr, filter.input_rate_hz, config.output_rate_hz)?);
    Ok(ChannelMatrix::from_rows(&rows))
}

/// Per-channel z-score statistics fitted on training windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Channels whose training variance vanished; they are centered only.
    pub constant: Vec<bool>,
}

const CONSTANT_STD: f64 = 1e-12;

/// Fits per-channel mean and population standard deviation over all present
/// (non-NaN) entries of the training windows.
pub fn fit_normalizer(train: &[ChannelMatrix]) -> Result<Normalizer, DspError> {
    let first = train.first().ok_or(DspError::EmptyTrainingSet)?;
    let rows = first.rows();
    let mut sum = vec![0.0; rows];
    let mut count = vec![0usize; rows];
    for w in train {
        if w.rows() != rows {
            return Err(DspError::Shape {
                expected_rows: rows,
                rows: w.rows(),
            });
        }
        for r in 0..rows {
            for &v in w.row(r).iter().filter(|v| !v.is_nan()) {
                sum[r] += v;
                count[r] += 1;
            }
        }
    }
    let mean: Vec<f64> = (0..rows)
        .map(|r| if count[r] > 0 { sum[r] / count[r] as f64 } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; rows];
    for w in train {
        for r in 0..rows {
            for &v in w.row(r).iter().filter(|v| !v.is_nan()) {
                let d = v - mean[r];
                sq[r] += d * d;
            }
        }
    }
    let mut std = Vec::with_capacity(rows);
    let mut constant = Vec::with_capacity(rows);
    for r in 0..rows {
        let s = if count[r] > 0 {
            libm::sqrt(sq[r] / count[r] as f64)
        } else {
            0.0
        };
        let flat = s <= CONSTANT_STD;
        constant.push(flat);
        std.push(if flat { 1.0 } else { s });
    }
    Ok(Normalizer { mean, std, constant })
}

impl Normalizer {
    /// Imputes absent entries (forward fill within the window, then the
    /// training mean) and z-scores every channel.
    pub fn apply(&self, window: &ChannelMatrix) -> Result<ChannelMatrix, DspError> {
        if window.rows() != self.mean.len() {
            return Err(DspError::Shape {
                expected_rows: self.mean.len(),
                rows: window.rows(),
            });
        }
        let mut out = window.clone();
        for r in 0..out.rows() {
            let (mean, std) = (self.mean[r], self.std[r]);
            let mut held: Option<f64> = None;
            for v in out.row_mut(r) {
                if v.is_nan() {
                    *v = held.unwrap_or(mean);
                } else {
                    held = Some(*v);
                }
                *v = (*v - mean) / std;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, window: &ChannelMatrix) -> ChannelMatrix {
        let mut out = window.clone();
        for r in 0..out.rows() {
            let (mean, std) = (self.mean[r], self.std[r]);
            for v in out.row_mut(r) {
                *v = *v * std + mean;
            }
        }
        out
    }
}
