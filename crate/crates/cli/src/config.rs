//! Study configuration (TOML). See `docs/config.md` for the full table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mediprobe_core::settings::{AnalysisSettings, DEFAULT_BIN_WIDTH, DEFAULT_MIN_FRACTION, DEFAULT_MIN_TAIL};
use mediprobe_core::TaskId;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Where the tail bin starts: a fixed length, or chosen per task so that at
/// least `min_tail` records land in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRule {
    Fixed(u64),
    Auto(usize),
}

impl Default for TailRule {
    fn default() -> Self {
        TailRule::Auto(DEFAULT_MIN_TAIL)
    }
}

impl fmt::Display for TailRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailRule::Fixed(t) => write!(f, "{t}"),
            TailRule::Auto(n) => write!(f, "auto({n})"),
        }
    }
}

impl FromStr for TailRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "auto" {
            return Ok(TailRule::Auto(DEFAULT_MIN_TAIL));
        }
        if let Some(inner) = s.strip_prefix("auto(").and_then(|r| r.strip_suffix(')')) {
            return inner
                .trim()
                .parse()
                .map(TailRule::Auto)
                .map_err(|_| format!("bad min_tail in {s:?}"));
        }
        s.parse()
            .map(TailRule::Fixed)
            .map_err(|_| format!("tail_start must be an integer or \"auto(N)\", got {s:?}"))
    }
}

impl Serialize for TailRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TailRule::Fixed(t) => s.serialize_u64(*t),
            TailRule::Auto(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for TailRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(t) => Ok(TailRule::Fixed(t)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub width: u64,
    pub tail_start: TailRule,
    /// Minimum share of a task's records per bin for the `bins` check.
    pub min_fraction: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_BIN_WIDTH,
            tail_start: TailRule::default(),
            min_fraction: DEFAULT_MIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Record files, relative to the config file.
    #[serde(default)]
    pub records: Vec<PathBuf>,
    /// Expected layer count; must match the record headers when given.
    #[serde(default)]
    pub layers: Option<usize>,
    /// Tasks to analyse, in report order. Defaults to every declared task by name.
    #[serde(default)]
    pub tasks: Option<Vec<TaskId>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub binning: BinningConfig,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: StudyConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut cfg.records {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        if let Some(out) = &mut cfg.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.records.is_empty() {
            return Err(CliError::Config("no record files configured".into()));
        }
        for r in &self.records {
            if !r.is_file() {
                return Err(CliError::Config(format!("record file {} does not exist", r.display())));
            }
        }
        if self.layers == Some(0) {
            return Err(CliError::Config("layers must be positive".into()));
        }
        if self.binning.width == 0 {
            return Err(CliError::Config("binning.width must be at least 1".into()));
        }
        if let TailRule::Fixed(t) = self.binning.tail_start {
            if !t.is_multiple_of(self.binning.width) {
                return Err(CliError::Config(format!(
                    "binning.tail_start {t} is not a multiple of width {}",
                    self.binning.width
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.binning.min_fraction) {
            return Err(CliError::Config("binning.min_fraction must lie in [0, 1]".into()));
        }
        self.analysis
            .check()
            .map_err(|e| CliError::Config(format!("analysis: {e}")))
    }
}
