//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, summary};
use crate::config::{ModelKind, RunConfig, VERSION};
use crate::container::WindowSet;
use crate::dataset::generate_dataset;
use crate::error::{AppError, Result};
use crate::experiment::{train_eval, ReportFile};
use crate::model::ModelArtifact;
use crate::pipeline::{run_pipeline, summary_line};

pub const REPORT_FILE: &str = "report.json";
pub const MODEL_DIR: &str = "model";
pub const BENCH_FILE: &str = "bench.json";

#[derive(Debug, Parser)]
#[command(name = "intox", version, about = "Wearable intoxication detection: pipeline, training, evaluation, benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// hdc, cnn or svm.
    #[arg(long, global = true)]
    pub model: Option<ModelKind>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, segment, filter, resample, window and label raw CSV streams.
    Pipeline {
        /// Directory holding `sensor/` and `tac/` CSV files.
        #[arg(long)]
        input: PathBuf,
    },
    /// Cross-validate a model on a window container and report test metrics.
    TrainEval {
        /// Directory written by `pipeline`.
        #[arg(long)]
        windows: PathBuf,
    },
    /// Time single-threaded inference of a saved model.
    Bench {
        /// Directory holding `model.bin` and `model.json`.
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Write a synthetic dataset.
    Synth {
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        separability: Option<f64>,
    },
}

fn require_out(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().ok_or_else(|| AppError::usage("cli", "--out <dir> is required"))
}

fn write_json<T: serde::Serialize>(stage: &str, path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| AppError::internal(stage, e))?;
    fs::write(path, json + "\n").map_err(|e| AppError::io(stage, path, e))
}

fn create_dir(stage: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(stage, dir, e))
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.common.config.as_deref())?;
    if let Some(m) = cli.common.model {
        cfg.model = m;
    }
    match &cli.command {
        Command::Synth { users, separability } => {
            if let Some(s) = cli.common.seed {
                cfg.synth.seed = s;
            }
            if let Some(n) = users {
                cfg.synth.n_users = *n;
            }
            if let Some(s) = separability {
                cfg.synth.separability = *s;
            }
        }
        Command::Bench { iterations, .. } => {
            cfg.seed = cli.common.seed.unwrap_or(cfg.seed);
            if let Some(n) = iterations {
                cfg.bench.iterations = *n;
            }
        }
        _ => cfg.seed = cli.common.seed.unwrap_or(cfg.seed),
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let say = |stdout: &mut dyn Write, text: &str| {
        writeln!(stdout, "{text}").map_err(|e| AppError::internal("output", e))
    };
    match &cli.command {
        Command::Pipeline { input } => {
            let out = require_out(&cli.common.out)?;
            let set = run_pipeline(&cfg, input)?;
            set.save(out)?;
            say(stdout, &summary_line(&set))
        }
        Command::TrainEval { windows } => {
            let out = require_out(&cli.common.out)?;
            let set = WindowSet::load(windows)?;
            let exp = train_eval(&cfg, &set)?;
            create_dir("report", out)?;
            let file = ReportFile { version: VERSION.to_string(), config: cfg.clone(), report: exp.report };
            write_json("report", &out.join(REPORT_FILE), &file)?;
            exp.artifact.save(&out.join(MODEL_DIR))?;
            say(stdout, file.report.table().trim_end())
        }
        Command::Bench { model_dir, .. } => {
            let artifact = ModelArtifact::load(model_dir)?;
            if cli.common.model.is_some_and(|m| m != artifact.meta.kind) {
                return Err(AppError::usage(
                    "bench",
                    format!("--model does not match the saved {} model", artifact.meta.kind),
                ));
            }
            let report = run_bench(&cfg, &artifact)?;
            if let Some(out) = &cli.common.out {
                create_dir("bench", out)?;
                write_json("bench", &out.join(BENCH_FILE), &report)?;
            }
            say(stdout, &summary(&report))
        }
        Command::Synth { .. } => {
            let out = require_out(&cli.common.out)?;
            let manifest = generate_dataset(&cfg, out)?;
            say(
                stdout,
                &format!(
                    "{} users written to {} | prevalence {:.6} (target {})",
                    manifest.users.len(),
                    out.display(),
                    manifest.prevalence,
                    manifest.prevalence_target
                ),
            )
        }
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version requests print and succeed; other parse failures are usage errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            return write!(stdout, "{e}").map_err(|e| AppError::internal("output", e));
        }
        Err(e) => return Err(AppError::Usage(e.to_string().trim_end().to_string())),
    };
    execute(&cli, stdout)
}
