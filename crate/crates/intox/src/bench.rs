//! Single-threaded inference latency and memory harness.
//!
//! Inputs are N(0, 1) windows drawn from a seeded stream, so every run sees
//! the same data; only the timings vary.

use std::fs;
use std::time::Instant;

use intox_core::rng::stream;
use intox_core::ChannelMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig, VERSION};
use crate::error::Result;
use crate::model::ModelArtifact;

const BENCH_STREAM: u64 = 0xB0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    pub model: ModelKind,
    pub iterations: usize,
    pub warmup: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
    pub p95_seconds: f64,
    /// Peak resident set growth over the timed loop, when the platform
    /// exposes it.
    pub peak_memory_delta_mb: Option<f64>,
    pub machine: String,
    pub power: String,
    pub config: RunConfig,
}

/// Preprocessed-looking windows with the model's shape.
pub fn random_windows(seed: u64, count: usize, channels: usize, len: usize) -> Vec<ChannelMatrix> {
    let mut rng = stream(seed, &[BENCH_STREAM]);
    (0..count)
        .map(|_| {
            let values = (0..channels * len).map(|_| StandardNormal.sample(&mut rng)).collect();
            ChannelMatrix::from_vec(channels, len, values)
        })
        .collect()
}

/// `(mean, median, p95)`; the percentiles use the nearest rank.
pub fn latency_stats(samples: &[f64]) -> (f64, f64, f64) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    (sorted.iter().sum::<f64>() / n as f64, rank(0.5), rank(0.95))
}

fn status_kb(field: &str) -> Option<f64> {
    let text = fs::read_to_string("/proc/self/status").ok()?;
    let line = text.lines().find(|l| l.starts_with(field))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Resets the kernel's peak-RSS mark; false where unsupported.
fn reset_peak_rss() -> bool {
    fs::write("/proc/self/clear_refs", "5").is_ok()
}

pub fn machine_descriptor() -> String {
    let model = fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|t| t.lines().find(|l| l.starts_with("model name")).map(|l| l.to_string()))
        .and_then(|l| l.split_once(':').map(|(_, v)| v.trim().to_string()));
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{} ({} logical cpus, {}-{})",
        model.unwrap_or_else(|| "unknown cpu".to_string()),
        cpus,
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Runs `warmup` untimed, then `iterations` timed inferences on the calling
/// thread. Each window is a fresh input, normalized as in deployment.
pub fn run_bench(cfg: &RunConfig, artifact: &ModelArtifact) -> Result<BenchReport> {
    cfg.validate()?;
    let (warmup, iterations) = (cfg.bench.warmup, cfg.bench.iterations);
    let meta = &artifact.meta;
    let inputs = random_windows(cfg.seed, warmup + iterations, meta.channels, meta.window_len);
    for w in &inputs[..warmup] {
        std::hint::black_box(artifact.predict(w)?);
    }
    let peak_tracked = reset_peak_rss();
    let before = status_kb("VmHWM:");
    let mut times = Vec::with_capacity(iterations);
    for w in &inputs[warmup..] {
        let start = Instant::now();
        std::hint::black_box(artifact.predict(std::hint::black_box(w))?);
        times.push(start.elapsed().as_secs_f64());
    }
    let after = status_kb("VmHWM:");
    let peak_memory_delta_mb = match (peak_tracked, before, after) {
        (true, Some(b), Some(a)) => Some((a - b).max(0.0) / 1024.0),
        _ => None,
    };
    let (mean, median, p95) = latency_stats(&times);
    Ok(BenchReport {
        version: VERSION.to_string(),
        model: meta.kind,
        iterations,
        warmup,
        mean_seconds: mean,
        median_seconds: median,
        p95_seconds: p95,
        peak_memory_delta_mb,
        machine: machine_descriptor(),
        power: "unavailable".to_string(),
        config: cfg.clone(),
    })
}

pub fn summary(report: &BenchReport) -> String {
    let mem = report.peak_memory_delta_mb.map_or_else(|| "unavailable".to_string(), |m| format!("{m:.3} MB"));
    format!(
        "{} x{}: mean {:.6} s, median {:.6} s, p95 {:.6} s, peak memory delta {}, power {}\nmachine: {}",
        report.model,
        report.iterations,
        report.mean_seconds,
        report.median_seconds,
        report.p95_seconds,
        mem,
        report.power,
        report.machine
    )
}
