//! Deterministic synthetic cohort: IMU and heart-rate streams with TAC traces
//! whose class separability is controlled by a single knob.
//!
//! Each user gets a 24-hour timeline with one TAC reading per period. Drinking
//! episodes ramp up linearly and decay exponentially. Recording sessions are
//! placed wholly inside TAC periods, so every window of a session carries the
//! same zero-order-hold label, and the session's signal is generated with or
//! without the intoxication effects to match. Window budgets per user are
//! fixed in advance so the cohort prevalence lands on the configured target.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SensorSample, TacReading, DEFAULT_TAC_THRESHOLD};
use crate::rng::{mix, stream};

const DAY_SECONDS: f64 = 86_400.0;
const RAMP_SECONDS: f64 = 3_600.0;
const HALF_LIFE_SECONDS: f64 = 2_700.0;
/// Seconds per window; a session of `20 k + 1` seconds yields `k` windows.
const WINDOW_SECONDS: f64 = 20.0;
/// Readings this close to the threshold are never used for placement, so
/// CSV rounding cannot flip a label.
const LABEL_MARGIN: f64 = 0.5;
const SLOT_MARGIN: f64 = 2.0;

const PROFILE_STREAM: u64 = 0x51;
const EPISODE_STREAM: u64 = 0x52;
const BUDGET_STREAM: u64 = 0x53;
const SESSION_STREAM: u64 = 0x54;
const PREVALENCE_STREAM: u64 = 0x55;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(&'static str),
    #[error("user {user}: {needed} s of intoxicated sessions but only {available} s of eligible periods")]
    Capacity { user: usize, needed: f64, available: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub sessions_per_user: usize,
    pub session_min_seconds: f64,
    pub session_max_seconds: f64,
    /// Drinking episodes per day.
    pub episode_rate: f64,
    /// 0 leaves the classes indistinguishable, 1 makes them strongly distinct.
    pub separability: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub tac_period_seconds: f64,
    /// Seconds between heart-rate readings.
    pub hr_period_seconds: f64,
    /// Cohort fraction of intoxicated windows.
    pub prevalence: f64,
    /// Peak TAC of an episode for a user with dose factor 1, in µg/L.
    pub dose_ugl: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 14,
            sessions_per_user: 12,
            session_min_seconds: 100.0,
            session_max_seconds: 300.0,
            episode_rate: 2.0,
            separability: 1.0,
            seed: 0,
            sample_rate_hz: 50.0,
            tac_period_seconds: 1_800.0,
            hr_period_seconds: 5.0,
            prevalence: 0.37,
            dose_ugl: 90.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m| Err(SynthError::Config(m));
        if !(0.0..=1.0).contains(&self.separability) {
            return bad("separability must lie in [0, 1]");
        }
        if self.n_users == 0 || self.sessions_per_user == 0 {
            return bad("n_users and sessions_per_user must be positive");
        }
        for v in [self.sample_rate_hz, self.tac_period_seconds, self.hr_period_seconds, self.dose_ugl] {
            if !(v.is_finite() && v > 0.0) {
                return bad("rates, periods and dose must be positive");
            }
        }
        if !(self.episode_rate > 0.0 && self.episode_rate <= 4.0) {
            return bad("episode_rate must lie in (0, 4] per day");
        }
        if !(self.prevalence > 0.05 && self.prevalence < 0.95) {
            return bad("prevalence must lie in (0.05, 0.95)");
        }
        let (lo, hi) = self.window_range();
        if lo == 0 || lo > hi {
            return bad("session length range must contain 20k+1 s for some k >= 3");
        }
        if session_seconds(hi) + 2.0 * SLOT_MARGIN > self.tac_period_seconds {
            return bad("sessions must fit inside one TAC period");
        }
        Ok(())
    }

    /// Smallest and largest windows-per-session allowed by the length range.
    /// Sessions shorter than 61 s would be discarded by segmentation.
    pub fn window_range(&self) -> (usize, usize) {
        let lo = libm::ceil((self.session_min_seconds.max(61.0) - 1.0) / WINDOW_SECONDS).max(0.0) as usize;
        let hi = libm::floor((self.session_max_seconds - 1.0) / WINDOW_SECONDS).max(0.0) as usize;
        (lo, hi)
    }

    /// Windows recorded per user.
    pub fn windows_per_user(&self) -> usize {
        let (lo, hi) = self.window_range();
        self.sessions_per_user * (lo + hi) / 2
    }
}

fn session_seconds(windows: usize) -> f64 {
    WINDOW_SECONDS * windows as f64 + 1.0
}

pub fn user_id(index: usize) -> String {
    format!("user{:02}", index + 1)
}

/// Stable per-user traits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub gait_hz: f64,
    pub gait_amplitude: [f64; 3],
    pub harmonic_amplitude: [f64; 3],
    pub gyro_amplitude: [f64; 3],
    pub hr_baseline: f64,
    /// Multiplier on the configured episode dose; one of three bands chosen by
    /// `user_index % 3`.
    pub dose_factor: f64,
}

impl UserProfile {
    pub fn draw(seed: u64, user_index: usize) -> Self {
        let mut rng = stream(seed, &[PROFILE_STREAM, user_index as u64]);
        let (lo, hi) = [(0.8, 1.0), (1.25, 1.5), (1.8, 2.2)][user_index % 3];
        let mut amp = |a: f64, b: f64| [rng.random_range(a..b), rng.random_range(a..b), rng.random_range(a..b)];
        let gait_amplitude = amp(0.15, 0.35);
        let harmonic_amplitude = amp(0.03, 0.1);
        let gyro_amplitude = amp(0.2, 0.6);
        Self {
            gait_hz: rng.random_range(0.8..1.4),
            gait_amplitude,
            harmonic_amplitude,
            gyro_amplitude,
            hr_baseline: rng.random_range(68.0..76.0),
            dose_factor: rng.random_range(lo..hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: f64,
    pub peak_ugl: f64,
}

/// Continuous TAC in µg/L: each episode rises linearly to its peak over an
/// hour, then halves every 45 minutes. Overlapping episodes add.
pub fn tac_curve(episodes: &[Episode], t: f64) -> f64 {
    episodes
        .iter()
        .map(|e| {
            let dt = t - e.start;
            if dt <= 0.0 {
                0.0
            } else if dt < RAMP_SECONDS {
                e.peak_ugl * dt / RAMP_SECONDS
            } else {
                e.peak_ugl * libm::exp(-LN_2 * (dt - RAMP_SECONDS) / HALF_LIFE_SECONDS)
            }
        })
        .sum()
}

/// One synthetic user: the raw streams and the ground truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct UserData {
    pub user_id: String,
    pub profile: UserProfile,
    pub episodes: Vec<Episode>,
    pub samples: Vec<SensorSample>,
    pub tac: Vec<TacReading>,
    pub intox_windows: usize,
    pub sober_windows: usize,
    /// `(start, windows, intoxicated)` per session, time-ordered.
    pub sessions: Vec<(f64, usize, bool)>,
}

/// Target intoxicated fraction for a user. Consecutive users form antithetic
/// pairs around the cohort target, so the cohort mean is the target.
pub fn user_prevalence(cfg: &SynthConfig, user_index: usize) -> f64 {
    let pair = user_index / 2;
    if user_index % 2 == 0 && user_index + 1 == cfg.n_users {
        return cfg.prevalence;
    }
    let delta = 0.05 * crate::rng::unit_f64(cfg.seed, &[PREVALENCE_STREAM, pair as u64]);
    if user_index % 2 == 0 {
        cfg.prevalence + delta
    } else {
        cfg.prevalence - delta
    }
}

/// Splits `total` windows into sessions of `lo..=hi` windows.
fn split_budget<R: Rng>(total: usize, lo: usize, hi: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = total;
    while left > 0 {
        let k = rng.random_range(lo..=hi).min(left);
        out.push(k);
        left -= k;
    }
    // Fold a short remainder into its neighbour, splitting evenly if that
    // overflows the maximum.
    if out.len() > 1 && *out.last().expect("non-empty") < lo {
        let tail = out.pop().expect("non-empty");
        let prev = out.pop().expect("len > 1");
        let sum = tail + prev;
        if sum <= hi {
            out.push(sum);
        } else {
            out.push(sum / 2);
            out.push(sum - sum / 2);
        }
    }
    out
}

fn place_episodes<R: Rng>(cfg: &SynthConfig, profile: &UserProfile, rng: &mut R) -> Vec<Episode> {
    let n = libm::round(cfg.episode_rate).max(1.0) as usize;
    let segment = DAY_SECONDS / n as f64;
    (0..n)
        .map(|i| {
            let lo = i as f64 * segment + 1_800.0;
            let hi = (i + 1) as f64 * segment - 4.5 * 3_600.0;
            Episode {
                start: libm::round(rng.random_range(lo..hi.max(lo + 1.0))),
                peak_ugl: cfg.dose_ugl * profile.dose_factor * rng.random_range(0.95..1.05),
            }
        })
        .collect()
}

/// Packs sessions (given in windows) into the listed TAC periods in shuffled
/// order, separated by random gaps. Returns start times.
fn pack<R: Rng>(
    cfg: &SynthConfig,
    user: usize,
    sessions: &[usize],
    slots: &mut [usize],
    rng: &mut R,
) -> Result<Vec<f64>, SynthError> {
    slots.shuffle(rng);
    let period = cfg.tac_period_seconds;
    let mut starts = Vec::with_capacity(sessions.len());
    let mut slot_iter = slots.iter();
    let mut cursor: Option<(f64, f64)> = None; // (next free time, slot end)
    for &k in sessions {
        let len = session_seconds(k);
        loop {
            if let Some((free, end)) = cursor {
                let start = libm::ceil(free + rng.random_range(2.0..30.0));
                if start + len <= end {
                    starts.push(start);
                    cursor = Some((start + len, end));
                    break;
                }
            }
            match slot_iter.next() {
                Some(&s) => {
                    let begin = s as f64 * period + SLOT_MARGIN;
                    cursor = Some((begin, (s + 1) as f64 * period - SLOT_MARGIN));
                }
                None => {
                    let needed = sessions.iter().map(|&k| session_seconds(k)).sum();
                    return Err(SynthError::Capacity {
                        user,
                        needed,
                        available: slots.len() as f64 * period,
                    });
                }
            }
        }
    }
    Ok(starts)
}

/// Reading values rounded to the precision written to CSV.
fn round_tac(v: f64) -> f64 {
    libm::round(v * 1_000.0) / 1_000.0
}

/// One reading per TAC period over the day, both ends included.
pub fn tac_readings(cfg: &SynthConfig, episodes: &[Episode]) -> Vec<TacReading> {
    let slots = libm::floor(DAY_SECONDS / cfg.tac_period_seconds) as usize;
    (0..=slots)
        .map(|k| {
            let t = k as f64 * cfg.tac_period_seconds;
            TacReading { t, tac: round_tac(tac_curve(episodes, t)) }
        })
        .collect()
}

pub fn generate_user(cfg: &SynthConfig, user_index: usize) -> Result<UserData, SynthError> {
    cfg.validate()?;
    let profile = UserProfile::draw(cfg.seed, user_index);
    let mut ep_rng = stream(cfg.seed, &[EPISODE_STREAM, user_index as u64]);
    let episodes = place_episodes(cfg, &profile, &mut ep_rng);

    let tac = tac_readings(cfg, &episodes);
    let slots = tac.len() - 1;
    let mut intox_slots: Vec<usize> = (0..slots)
        .filter(|&k| tac[k].tac > DEFAULT_TAC_THRESHOLD + LABEL_MARGIN)
        .collect();
    let mut sober_slots: Vec<usize> = (0..slots)
        .filter(|&k| tac[k].tac < DEFAULT_TAC_THRESHOLD - LABEL_MARGIN)
        .collect();

    let total = cfg.windows_per_user();
    let intox_windows = libm::round(user_prevalence(cfg, user_index) * total as f64) as usize;
    let sober_windows = total - intox_windows;
    let (lo, hi) = cfg.window_range();
    let mut budget_rng = stream(cfg.seed, &[BUDGET_STREAM, user_index as u64]);
    let intox_sessions = split_budget(intox_windows, lo, hi, &mut budget_rng);
    let sober_sessions = split_budget(sober_windows, lo, hi, &mut budget_rng);
    let intox_starts = pack(cfg, user_index, &intox_sessions, &mut intox_slots, &mut budget_rng)?;
    let sober_starts = pack(cfg, user_index, &sober_sessions, &mut sober_slots, &mut budget_rng)?;

    let mut sessions: Vec<(f64, usize, bool)> = intox_starts
        .iter()
        .zip(&intox_sessions)
        .map(|(&s, &k)| (s, k, true))
        .chain(sober_starts.iter().zip(&sober_sessions).map(|(&s, &k)| (s, k, false)))
        .collect();
    sessions.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut samples = Vec::new();
    for (i, &(start, k, intox)) in sessions.iter().enumerate() {
        let key = mix(cfg.seed, &[SESSION_STREAM, user_index as u64, i as u64]);
        samples.extend(simulate_session(&profile, cfg, start, session_seconds(k), intox, key));
    }
    Ok(UserData {
        user_id: user_id(user_index),
        profile,
        episodes,
        samples,
        tac,
        intox_windows,
        sober_windows,
        sessions,
    })
}

/// One gap-free recording. Sober motion is a gait fundamental and harmonic
/// plus white noise; intoxicated motion adds slow sway and phase jitter
/// scaled by separability, and heart rate rises by up to 15 bpm.
pub fn simulate_session(
    profile: &UserProfile,
    cfg: &SynthConfig,
    start: f64,
    duration: f64,
    intoxicated: bool,
    key: u64,
) -> Vec<SensorSample> {
    let mut rng = stream(key, &[]);
    let sep = if intoxicated { cfg.separability } else { 0.0 };
    let rate = cfg.sample_rate_hz;
    let n = libm::round(duration * rate) as usize + 1;
    let hr_every = libm::round(cfg.hr_period_seconds * rate).max(1.0) as usize;

    // Drawn for every session so the sober and intoxicated draws line up.
    let gait_hz = profile.gait_hz * rng.random_range(0.95..1.05);
    let phase0: f64 = rng.random_range(0.0..2.0 * PI);
    let axis_phase = [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)];
    let sway_hz = rng.random_range(0.1..0.4);
    let sway_phase = rng.random_range(0.0..2.0 * PI);
    let hr_offset = Normal::new(0.0, 1.5).expect("valid").sample(&mut rng);
    let accel_noise = Normal::new(0.0, 0.03).expect("valid");
    let gyro_noise = Normal::new(0.0, 0.05).expect("valid");
    let hr_noise = Normal::new(0.0, 1.0).expect("valid");
    let jitter = Normal::new(0.0, 1.0).expect("valid");

    let sway_accel = 0.25 * sep;
    let sway_gyro = 0.4 * sep;
    let jitter_step = 0.04 * sep;
    let hr_level = profile.hr_baseline + hr_offset + 15.0 * sep;

    let mut drift = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let tau = i as f64 / rate;
        drift += jitter_step * jitter.sample(&mut rng);
        let phi = 2.0 * PI * gait_hz * tau + phase0 + drift;
        let sway = libm::sin(2.0 * PI * sway_hz * tau + sway_phase);
        let mut accel = [0.0; 3];
        let mut gyro = [0.0; 3];
        for a in 0..3 {
            accel[a] = profile.gait_amplitude[a] * libm::sin(phi + axis_phase[a])
                + profile.harmonic_amplitude[a] * libm::sin(2.0 * phi + 2.0 * axis_phase[a])
                + accel_noise.sample(&mut rng);
            gyro[a] = profile.gyro_amplitude[a] * libm::cos(phi + axis_phase[a]) + gyro_noise.sample(&mut rng);
        }
        accel[2] += 1.0;
        accel[0] += sway_accel * sway;
        accel[1] += sway_accel * libm::cos(2.0 * PI * sway_hz * tau + sway_phase);
        gyro[2] += sway_gyro * sway;
        let noise = hr_noise.sample(&mut rng);
        let hr = (i % hr_every == 0).then(|| round2((hr_level + noise).clamp(30.0, 220.0)));
        out.push(SensorSample {
            t: round2(start + tau),
            accel: accel.map(round6),
            gyro: gyro.map(round6),
            hr,
        });
    }
    out
}

fn round2(v: f64) -> f64 {
    libm::round(v * 100.0) / 100.0
}

fn round6(v: f64) -> f64 {
    libm::round(v * 1e6) / 1e6
}
