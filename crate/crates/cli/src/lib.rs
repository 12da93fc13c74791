//! The `mediprobe` command line: a thin orchestration layer over
//! `mediprobe-core` that loads a study config, runs one analysis and writes
//! deterministic report files.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use crate::error::CliError;

pub const ENV_PREFIX: &str = "MEDIPROBE_";
pub const DEFAULT_OUT_DIR: &str = "mediprobe-reports";

#[derive(Debug, Parser)]
#[command(
    name = "mediprobe",
    version,
    about = "Context-length mediation analysis of layer-wise probing results"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Study config (TOML).
    #[arg(long, global = true, env = "MEDIPROBE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Report directory; overrides the config's `out`.
    #[arg(long, global = true, env = "MEDIPROBE_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, env = "MEDIPROBE_WORKERS")]
    pub workers: Option<usize>,
    /// Seed for `synth`; overrides the scenario's seed.
    #[arg(long, global = true, env = "MEDIPROBE_SEED")]
    pub seed: Option<u64>,
    /// Clamp negative layer deltas at zero.
    #[arg(long, global = true, env = "MEDIPROBE_CLAMP_DELTAS")]
    pub clamp_deltas: bool,
    /// Drop bins undefined for either task and renormalize the imposed distribution.
    #[arg(long, global = true, env = "MEDIPROBE_RENORMALIZE_MISSING_BINS")]
    pub renormalize_missing_bins: bool,
    /// Records a bin needs before it is used downstream.
    #[arg(long, global = true, env = "MEDIPROBE_MIN_SUPPORT")]
    pub min_support: Option<usize>,
    /// Strictness gap for task orderings.
    #[arg(long, global = true, env = "MEDIPROBE_EPSILON")]
    pub epsilon: Option<f64>,
    /// Use low-support bins for intervals, paradoxes and NDE.
    #[arg(long, global = true, env = "MEDIPROBE_INCLUDE_LOW_SUPPORT")]
    pub include_low_support: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check record files against the schema and invariants.
    Validate {
        /// Record files; defaults to the config's `records`.
        files: Vec<PathBuf>,
    },
    /// Per-bin record counts, the minimum-fraction check and per-task maximal thresholds.
    Bins,
    /// Expected layers by length threshold and/or by bin (both when neither flag is given).
    Elayer {
        #[arg(long)]
        threshold_curve: bool,
        #[arg(long)]
        by_bin: bool,
    },
    /// Natural direct effect of one task pair.
    Nde {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Impose this task's empirical distribution (default: `--from`).
        #[arg(long, conflicts_with = "dist")]
        dist_of: Option<String>,
        /// Impose a distribution read from a JSON object `{"bin label": weight}`.
        #[arg(long)]
        dist: Option<PathBuf>,
    },
    /// Unmediated differences and NDEs for every task pair.
    Pairwise,
    /// Attainable expected-layer interval of every task.
    Intervals,
    /// Every task ranking some choice of distributions produces.
    Rankings,
    /// Simpson's-paradox witnesses for every task pair.
    Paradox,
    /// Largest and smallest attainable differences for every task pair.
    Extremes,
    /// Generate a synthetic record file from a scenario.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Tabular data behind every standard figure, under `<out>/plot-data/`.
    PlotData,
}

/// Parses `args` and runs the command, returning the summary instead of printing it.
pub fn execute<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    commands::run(&cli)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
