//! Analysis knobs shared by the metric, mediation and distribution modules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ScoreAggregator;
use crate::record::{RecordSet, TaskId};

pub const DEFAULT_MIN_SUPPORT: usize = 30;
pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_RANKING_CAP: usize = 8;
pub const DEFAULT_MIN_TAIL: usize = 2000;
pub const DEFAULT_MIN_FRACTION: f64 = 0.01;
pub const DEFAULT_BIN_WIDTH: u64 = 3;

/// What to do with a positively weighted bin that is undefined for one of the two tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingBinPolicy {
    #[default]
    Strict,
    /// Drop the bin and renormalize the imposed distribution over the rest.
    Renormalize,
}

/// How a task's expected layer under its own (natural) distribution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnmediatedMode {
    /// Expected layer of the pooled score profile over all records.
    #[default]
    Pooled,
    /// Empirical-distribution-weighted average of the per-bin expected layers.
    BinWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Clamp negative layer deltas at zero before computing expected layers.
    pub clamp_deltas: bool,
    /// Bins with fewer records are flagged low-support.
    pub min_support: usize,
    /// Use low-support bins in intervals, paradoxes and NDE.
    pub include_low_support: bool,
    pub missing_bins: MissingBinPolicy,
    pub unmediated: UnmediatedMode,
    /// Strictness gap for task orderings.
    pub epsilon: f64,
    pub ranking_cap: usize,
    /// Per-task aggregator overrides; otherwise derived from the outcome variant.
    pub aggregators: BTreeMap<TaskId, ScoreAggregator>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            clamp_deltas: false,
            min_support: DEFAULT_MIN_SUPPORT,
            include_low_support: false,
            missing_bins: MissingBinPolicy::Strict,
            unmediated: UnmediatedMode::Pooled,
            epsilon: DEFAULT_EPSILON,
            ranking_cap: DEFAULT_RANKING_CAP,
            aggregators: BTreeMap::new(),
        }
    }
}

impl AnalysisSettings {
    pub fn check(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be a non-negative number, got {}",
                self.epsilon
            )));
        }
        if self.ranking_cap == 0 {
            return Err(Error::Invalid("ranking cap must be positive".into()));
        }
        Ok(())
    }

    /// Aggregator for `task`: the configured override if any, else the one matching its variant.
    pub fn aggregator(&self, rs: &RecordSet, task: &TaskId) -> Result<ScoreAggregator> {
        let variant = rs.variant(task)?;
        match self.aggregators.get(task) {
            Some(agg) => {
                agg.check(variant)?;
                Ok(*agg)
            }
            None => Ok(ScoreAggregator::for_variant(variant)),
        }
    }
}
