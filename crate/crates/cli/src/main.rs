//! `nsdid` — command-line pipeline for North Sámi dialect identification.
//!
//! Subcommands: `extract`, `stats`, `split`, `run`, `lid-report`.
//! Errors are reported as a single JSON object on stderr
//! (`{"error": ..., "stage": ..., "seed": ...}`) with a nonzero exit code.
//! `NSDID_WORKERS` caps the worker pool used for feature extraction and
//! loading.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use nsdid_core::dsp::FeatureKind;
use nsdid_core::splits::SplitMode;

#[derive(Parser)]
#[command(name = "nsdid", version, about = "North Sámi dialect identification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract frame-level features into FMX files plus a JSON-Lines index
    Extract {
        /// JSON-Lines corpus manifest
        #[arg(long)]
        manifest: PathBuf,
        /// FB40, MFCC39, PROSODY, or EMBEDDING
        #[arg(long)]
        kind: String,
        /// Output directory for .fmx files and index.jsonl
        #[arg(long)]
        out: PathBuf,
    },
    /// Print utterance counts per dialect, majority language, and gender
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Generate deterministic train/val/test split files
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// SD or SI
        #[arg(long)]
        mode: String,
        /// Comma-separated seeds
        #[arg(long, default_value = "11,22,33")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a TOML config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// n-best majority-language influence tables from LID posteriors
    LidReport {
        #[arg(long)]
        manifest: PathBuf,
        /// JSON-Lines posterior file
        #[arg(long)]
        posteriors: PathBuf,
        /// Comma-separated n values
        #[arg(long, default_value = "1,2,5")]
        n: String,
        /// Also emit the table with Estonian merged into Finnish
        #[arg(long)]
        merge_finnic: bool,
        /// Optional directory for CSV/text outputs
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Machine-readable failure written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub type CmdResult<T> = Result<T, ErrorReport>;

/// Attach a pipeline stage (and optionally the active seed) to errors.
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> CmdResult<T>;
    fn stage_seed(self, stage: &str, seed: u64) -> CmdResult<T>;
}

impl<T, E: std::fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &str) -> CmdResult<T> {
        self.map_err(|e| ErrorReport {
            error: e.to_string(),
            stage: stage.to_string(),
            seed: None,
        })
    }

    fn stage_seed(self, stage: &str, seed: u64) -> CmdResult<T> {
        self.map_err(|e| ErrorReport {
            error: e.to_string(),
            stage: stage.to_string(),
            seed: Some(seed),
        })
    }
}

fn parse_seeds(text: &str) -> CmdResult<Vec<u64>> {
    let seeds: Result<Vec<u64>, _> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u64>())
        .collect();
    let seeds = seeds.stage("parse_args")?;
    if seeds.is_empty() {
        return Err(ErrorReport {
            error: "no seeds given".into(),
            stage: "parse_args".into(),
            seed: None,
        });
    }
    Ok(seeds)
}

fn parse_n_values(text: &str) -> CmdResult<Vec<usize>> {
    let ns: Result<Vec<usize>, _> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>())
        .collect();
    let ns = ns.stage("parse_args")?;
    if ns.is_empty() {
        return Err(ErrorReport {
            error: "empty n list".into(),
            stage: "parse_args".into(),
            seed: None,
        });
    }
    Ok(ns)
}

fn dispatch(cli: Cli) -> CmdResult<()> {
    match cli.command {
        Command::Extract {
            manifest,
            kind,
            out,
        } => {
            let kind: FeatureKind = kind.parse().stage("parse_args")?;
            commands::extract::run(&manifest, kind, &out)
        }
        Command::Stats { manifest } => commands::stats::run(&manifest),
        Command::Split {
            manifest,
            mode,
            seeds,
            out,
        } => {
            let mode: SplitMode = mode.parse().stage("parse_args")?;
            let seeds = parse_seeds(&seeds)?;
            commands::split::run(&manifest, mode, &seeds, &out)
        }
        Command::Run { config } => commands::run::run(&config),
        Command::LidReport {
            manifest,
            posteriors,
            n,
            merge_finnic,
            out,
        } => {
            let n_values = parse_n_values(&n)?;
            commands::lid_report::run(
                &manifest,
                &posteriors,
                &n_values,
                merge_finnic,
                out.as_deref(),
            )
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(report) = dispatch(cli) {
        eprintln!(
            "{}",
            serde_json::to_string(&report)
                .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", report.error))
        );
        std::process::exit(1);
    }
}
