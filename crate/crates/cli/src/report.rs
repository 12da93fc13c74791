//! Report files: every report is written twice, as `<stem>.tsv` for people and
//! plotting tools and as `<stem>.jsonl` (one JSON object per row) for
//! programs. Layouts are documented in `docs/reports.md`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mediprobe_core::distribution::{LayerInterval, ParadoxWitness, Ranking};
use mediprobe_core::mediation::{Divergence, PairEntry};
use mediprobe_core::metrics::EstimateFlag;
use mediprobe_core::record::Violation;
use mediprobe_core::{Bin, TaskId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub trait TsvRow {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

fn flag_name(flag: EstimateFlag) -> &'static str {
    match flag {
        EstimateFlag::Ok => "ok",
        EstimateFlag::LowSupport => "low-support",
        EstimateFlag::Degenerate => "degenerate",
        EstimateFlag::Empty => "empty",
    }
}

/// Output directory for one run.
#[derive(Debug, Clone)]
pub struct ReportDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl ReportDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn subdir(&self, name: &str) -> Result<ReportDir, CliError> {
        ReportDir::create(&self.root.join(name))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_with<F>(&mut self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| {
            for row in rows {
                serde_json::to_writer(&mut *w, row)?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })
    }

    pub fn write_tsv<T: TsvRow>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| {
            writeln!(w, "{}", T::header().join("\t"))?;
            for row in rows {
                writeln!(w, "{}", row.cells().join("\t"))?;
            }
            Ok(())
        })
    }

    /// Writes `<stem>.tsv` and `<stem>.jsonl`.
    pub fn write_report<T: TsvRow + Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        self.write_tsv(&format!("{stem}.tsv"), rows)?;
        self.write_jsonl(&format!("{stem}.jsonl"), rows)?;
        Ok(())
    }
}

/// Reads a JSONL report back into its row type.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let row = serde_json::from_str(&line)
            .map_err(|e| CliError::Findings(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    pub file: String,
    pub line: usize,
    pub violation: Violation,
}

impl TsvRow for ViolationRow {
    fn header() -> &'static [&'static str] {
        &["file", "line", "violation"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.file.clone(), self.line.to_string(), self.violation.to_string()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinShareRow {
    pub task: TaskId,
    pub bin: Bin,
    pub count: usize,
    pub fraction: f64,
    pub pass: bool,
}

impl TsvRow for BinShareRow {
    fn header() -> &'static [&'static str] {
        &["task", "bin_label", "count", "fraction", "min_fraction_pass"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.bin.label(),
            self.count.to_string(),
            fmt_f64(self.fraction),
            self.pass.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoiceRow {
    pub task: TaskId,
    pub max_threshold: u64,
    pub tail_count: usize,
    pub total: usize,
    pub sufficient: bool,
}

impl TsvRow for ThresholdChoiceRow {
    fn header() -> &'static [&'static str] {
        &["task", "max_threshold", "tail_count", "total", "sufficient"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.max_threshold.to_string(),
            self.tail_count.to_string(),
            self.total.to_string(),
            self.sufficient.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub task: TaskId,
    pub threshold: u64,
    pub expected_layer: Option<f64>,
    pub support: usize,
    pub flag: EstimateFlag,
}

impl TsvRow for ThresholdRow {
    fn header() -> &'static [&'static str] {
        &["task", "threshold", "expected_layer", "support", "degenerate_flag"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.threshold.to_string(),
            fmt_opt(self.expected_layer),
            self.support.to_string(),
            flag_name(self.flag).into(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinLayerRow {
    pub task: TaskId,
    pub bin: Bin,
    pub expected_layer: Option<f64>,
    pub support: usize,
    pub flag: EstimateFlag,
}

impl TsvRow for BinLayerRow {
    fn header() -> &'static [&'static str] {
        &["task", "bin", "expected_layer", "support", "degenerate_flag"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.bin.label(),
            fmt_opt(self.expected_layer),
            self.support.to_string(),
            flag_name(self.flag).into(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub task_from: TaskId,
    pub task_to: TaskId,
    pub bin: Bin,
    pub weight: f64,
    pub contribution: Option<f64>,
}

impl TsvRow for ContributionRow {
    fn header() -> &'static [&'static str] {
        &["task_from", "task_to", "bin", "weight", "contribution"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task_from.to_string(),
            self.task_to.to_string(),
            self.bin.label(),
            fmt_f64(self.weight),
            fmt_opt(self.contribution),
        ]
    }
}

fn divergence_names(entry: &PairEntry) -> String {
    let names: Vec<&str> = entry
        .divergences()
        .into_iter()
        .map(|d| match d {
            Divergence::Amplified => "amplified",
            Divergence::Attenuated => "attenuated",
            Divergence::Reversed => "reversed",
        })
        .collect();
    if names.is_empty() {
        "-".into()
    } else {
        names.join(",")
    }
}

fn bins_cell(bins: &[Bin]) -> String {
    if bins.is_empty() {
        "-".into()
    } else {
        bins.iter().map(Bin::label).collect::<Vec<_>>().join(",")
    }
}

impl TsvRow for PairEntry {
    fn header() -> &'static [&'static str] {
        &[
            "t1",
            "t2",
            "unmediated",
            "nde_t1_dist",
            "nde_t2_dist",
            "ratio",
            "ratio_t2_dist",
            "divergence",
            "skipped_bins",
            "errors",
        ]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.t1.to_string(),
            self.t2.to_string(),
            fmt_opt(self.unmediated),
            fmt_opt(self.nde_t1_dist),
            fmt_opt(self.nde_t2_dist),
            fmt_opt(self.ratio),
            fmt_opt(self.ratio_t2_dist),
            divergence_names(self),
            bins_cell(&self.skipped_bins),
            if self.errors.is_empty() {
                "-".into()
            } else {
                self.errors.join("; ")
            },
        ]
    }
}

impl TsvRow for LayerInterval {
    fn header() -> &'static [&'static str] {
        &["task", "low", "high", "argmin_bin", "argmax_bin"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            fmt_f64(self.low),
            fmt_f64(self.high),
            self.argmin_bin.label(),
            self.argmax_bin.label(),
        ]
    }
}

impl TsvRow for Ranking {
    fn header() -> &'static [&'static str] {
        &["ranking", "witness"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            ranking_line(self),
            self.witness.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","),
        ]
    }
}

pub fn ranking_line(r: &Ranking) -> String {
    r.order.iter().map(TaskId::as_str).collect::<Vec<_>>().join(" < ")
}

impl TsvRow for ParadoxWitness {
    fn header() -> &'static [&'static str] {
        &[
            "task_a",
            "task_b",
            "dominance",
            "shared_bins",
            "witness_bin_a",
            "witness_bin_b",
            "aggregate_a",
            "aggregate_b",
            "margin",
        ]
    }
    fn cells(&self) -> Vec<String> {
        let support = |d: &mediprobe_core::ContextDistribution| {
            d.iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(b, w)| format!("{}:{}", b.label(), fmt_f64(w)))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            self.task_a.to_string(),
            self.task_b.to_string(),
            match self.dominance {
                mediprobe_core::distribution::Dominance::ABelow => "a-below".into(),
                mediprobe_core::distribution::Dominance::AAbove => "a-above".into(),
            },
            self.shared_bins.len().to_string(),
            support(&self.distribution_a),
            support(&self.distribution_b),
            fmt_f64(self.aggregate_a),
            fmt_f64(self.aggregate_b),
            fmt_f64(self.margin),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeRow {
    pub t1: TaskId,
    pub t2: TaskId,
    /// `high(t1) - low(t2)`.
    pub max_difference: f64,
    /// `low(t1) - high(t2)`.
    pub min_difference: f64,
    /// Both extremes share a sign: no distribution changes the order.
    pub order_fixed: bool,
}

impl TsvRow for ExtremeRow {
    fn header() -> &'static [&'static str] {
        &["t1", "t2", "max_difference", "min_difference", "order_fixed"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.t1.to_string(),
            self.t2.to_string(),
            fmt_f64(self.max_difference),
            fmt_f64(self.min_difference),
            self.order_fixed.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRow {
    pub task: TaskId,
    pub bin: Bin,
    pub weight: f64,
    pub expected_layer: Option<f64>,
}

impl TsvRow for PlantedRow {
    fn header() -> &'static [&'static str] {
        &["task", "bin", "weight", "planted_expected_layer"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.task.to_string(),
            self.bin.label(),
            fmt_f64(self.weight),
            fmt_opt(self.expected_layer),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdeBarRow {
    pub t1: TaskId,
    pub t2: TaskId,
    /// Whose distribution is imposed, or `unmediated`.
    pub measure: String,
    pub value: Option<f64>,
}

impl TsvRow for NdeBarRow {
    fn header() -> &'static [&'static str] {
        &["t1", "t2", "measure", "value"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.t1.to_string(),
            self.t2.to_string(),
            self.measure.clone(),
            fmt_opt(self.value),
        ]
    }
}
