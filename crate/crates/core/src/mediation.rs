//! Natural direct effects of the task on the expected layer, with the
//! context-length distribution held fixed, and the unmediated differences
//! they are compared against.
//!
//! For tasks `t1`, `t2` and an imposed distribution `P` over bins,
//!
//! ```text
//! NDE(t1 -> t2) = sum_c [E(t2, c) - E(t1, c)] * P(c)
//! ```
//!
//! where `E(t, c)` is the per-bin expected layer. By default `P` is the
//! empirical distribution of `t1`. Every difference in this module is
//! "`t2` minus `t1`".

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{empirical_distribution, Bin, BinSpec, ContextDistribution};
use crate::error::{Error, Result};
use crate::metrics::{expected_layer_by_bin, task_expected_layer, BinLayers, BinTable};
use crate::record::{RecordSet, TaskId};
use crate::settings::{AnalysisSettings, MissingBinPolicy, UnmediatedMode};

/// `|NDE| >= AMPLIFIED_RATIO * |unmediated|` marks an amplified pair.
pub const AMPLIFIED_RATIO: f64 = 50.0;
/// `|NDE| <= ATTENUATED_RATIO * |unmediated|` marks an attenuated pair.
pub const ATTENUATED_RATIO: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdeReport {
    pub task_from: TaskId,
    pub task_to: TaskId,
    pub imposed_distribution: ContextDistribution,
    pub value: f64,
    /// Weight times per-bin difference, after any renormalization.
    pub per_bin_contributions: BTreeMap<Bin, f64>,
    pub skipped_bins: Vec<Bin>,
}

struct Imposed {
    value: f64,
    contributions: BTreeMap<Bin, f64>,
    skipped: Vec<Bin>,
}

/// Weighted sum of `term(bin)` under `dist`, applying the missing-bin policy
/// to positively weighted bins where `term` is undefined.
fn impose<F>(dist: &ContextDistribution, policy: MissingBinPolicy, term: F) -> Result<Imposed>
where
    F: Fn(&Bin) -> std::result::Result<f64, TaskId>,
{
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (bin, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
        match term(bin) {
            Ok(v) => kept.push((*bin, w, v)),
            Err(task) => match policy {
                MissingBinPolicy::Strict => {
                    return Err(Error::MissingBin {
                        task,
                        bin: *bin,
                        weight: w,
                    })
                }
                MissingBinPolicy::Renormalize => skipped.push(*bin),
            },
        }
    }
    if kept.is_empty() {
        return Err(Error::AllBinsSkipped);
    }
    let scale = if skipped.is_empty() {
        1.0
    } else {
        kept.iter().map(|(_, w, _)| w).sum::<f64>()
    };
    let contributions: BTreeMap<Bin, f64> = kept.into_iter().map(|(bin, w, v)| (bin, w / scale * v)).collect();
    Ok(Imposed {
        value: contributions.values().sum(),
        contributions,
        skipped,
    })
}

/// NDE from precomputed per-bin expected layers.
pub fn nde_from_layers(
    t1: &TaskId,
    layers1: &BinLayers,
    t2: &TaskId,
    layers2: &BinLayers,
    dist: &ContextDistribution,
    policy: MissingBinPolicy,
) -> Result<NdeReport> {
    let imposed = impose(dist, policy, |bin| {
        let e1 = layers1.get(bin).ok_or_else(|| t1.clone())?;
        let e2 = layers2.get(bin).ok_or_else(|| t2.clone())?;
        Ok(e2 - e1)
    })?;
    Ok(NdeReport {
        task_from: t1.clone(),
        task_to: t2.clone(),
        imposed_distribution: dist.clone(),
        value: imposed.value,
        per_bin_contributions: imposed.contributions,
        skipped_bins: imposed.skipped,
    })
}

/// Per-bin table of `task` computed with the task's configured aggregator.
pub fn bin_table(rs: &RecordSet, task: &TaskId, spec: &BinSpec, settings: &AnalysisSettings) -> Result<BinTable> {
    let agg = settings.aggregator(rs, task)?;
    expected_layer_by_bin(rs, task, agg, spec, settings.clamp_deltas, settings.min_support)
}

/// NDE of `t1 -> t2`; `dist` defaults to the empirical distribution of `t1`.
pub fn nde(
    rs: &RecordSet,
    t1: &TaskId,
    t2: &TaskId,
    spec: &BinSpec,
    settings: &AnalysisSettings,
    dist: Option<&ContextDistribution>,
) -> Result<NdeReport> {
    let l1 = bin_table(rs, t1, spec, settings)?.defined(settings.include_low_support);
    let l2 = bin_table(rs, t2, spec, settings)?.defined(settings.include_low_support);
    let owned;
    let dist = match dist {
        Some(d) => d,
        None => {
            owned = empirical_distribution(rs, t1, spec)?;
            &owned
        }
    };
    nde_from_layers(t1, &l1, t2, &l2, dist, settings.missing_bins)
}

/// Expected layer of `task` under its own context-length distribution.
pub fn natural_expected_layer(
    rs: &RecordSet,
    task: &TaskId,
    spec: &BinSpec,
    settings: &AnalysisSettings,
) -> Result<f64> {
    match settings.unmediated {
        UnmediatedMode::Pooled => {
            let agg = settings.aggregator(rs, task)?;
            Ok(task_expected_layer(rs, task, agg, settings.clamp_deltas)?.value)
        }
        UnmediatedMode::BinWeighted => {
            let layers = bin_table(rs, task, spec, settings)?.defined(settings.include_low_support);
            let dist = empirical_distribution(rs, task, spec)?;
            bin_weighted(task, &layers, &dist, settings.missing_bins)
        }
    }
}

fn bin_weighted(
    task: &TaskId,
    layers: &BinLayers,
    dist: &ContextDistribution,
    policy: MissingBinPolicy,
) -> Result<f64> {
    Ok(impose(dist, policy, |bin| layers.get(bin).ok_or_else(|| task.clone()))?.value)
}

/// `natural(t2) - natural(t1)`, each task keeping its own distribution.
pub fn unmediated_difference(
    rs: &RecordSet,
    t1: &TaskId,
    t2: &TaskId,
    spec: &BinSpec,
    settings: &AnalysisSettings,
) -> Result<f64> {
    let e1 = natural_expected_layer(rs, t1, spec, settings)?;
    let e2 = natural_expected_layer(rs, t2, spec, settings)?;
    Ok(e2 - e1)
}

/// Everything the pairwise report needs from one task, computed once.
#[derive(Debug, Clone)]
pub struct TaskSummary {
    pub task: TaskId,
    pub layers: Result<BinLayers>,
    pub distribution: Result<ContextDistribution>,
    pub natural: Result<f64>,
}

impl TaskSummary {
    pub fn compute(rs: &RecordSet, task: &TaskId, spec: &BinSpec, settings: &AnalysisSettings) -> Self {
        let table = bin_table(rs, task, spec, settings);
        let layers = table.map(|t| t.defined(settings.include_low_support));
        let distribution = empirical_distribution(rs, task, spec);
        let natural = match settings.unmediated {
            UnmediatedMode::Pooled => natural_expected_layer(rs, task, spec, settings),
            UnmediatedMode::BinWeighted => match (&layers, &distribution) {
                (Ok(l), Ok(d)) => bin_weighted(task, l, d, settings.missing_bins),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            },
        };
        Self {
            task: task.clone(),
            layers,
            distribution,
            natural,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub t1: TaskId,
    pub t2: TaskId,
    pub unmediated: Option<f64>,
    /// NDE of `t1 -> t2` under the distribution of `t1`.
    pub nde_t1_dist: Option<f64>,
    /// NDE of `t1 -> t2` under the distribution of `t2`.
    pub nde_t2_dist: Option<f64>,
    /// `nde_t1_dist / unmediated`; negative when the order flips.
    pub ratio: Option<f64>,
    /// `nde_t2_dist / unmediated`.
    pub ratio_t2_dist: Option<f64>,
    pub skipped_bins: Vec<Bin>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    Amplified,
    Attenuated,
    Reversed,
}

impl PairEntry {
    fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        [self.ratio, self.ratio_t2_dist].into_iter().flatten()
    }

    /// Ways in which an NDE departs from the unmediated difference.
    pub fn divergences(&self) -> Vec<Divergence> {
        let mut out = Vec::new();
        if self.ratios().any(|r| r.abs() >= AMPLIFIED_RATIO) {
            out.push(Divergence::Amplified);
        }
        if self.ratios().any(|r| r.abs() <= ATTENUATED_RATIO) {
            out.push(Divergence::Attenuated);
        }
        if self.ratios().any(|r| r < 0.0) {
            out.push(Divergence::Reversed);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub entries: Vec<PairEntry>,
}

fn ratio(nde: Option<f64>, unmediated: Option<f64>) -> Option<f64> {
    match (nde, unmediated) {
        (Some(n), Some(u)) if u != 0.0 => Some(n / u),
        _ => None,
    }
}

fn pair_entry(a: &TaskSummary, b: &TaskSummary, policy: MissingBinPolicy) -> PairEntry {
    let mut errors = Vec::new();
    let mut skipped_bins = Vec::new();
    let unmediated = match (&a.natural, &b.natural) {
        (Ok(x), Ok(y)) => Some(y - x),
        (Err(e), _) | (_, Err(e)) => {
            errors.push(format!("unmediated: {e}"));
            None
        }
    };
    let mut nde_under = |which: &str, dist: &Result<ContextDistribution>| -> Option<f64> {
        let attempt = match (&a.layers, &b.layers, dist) {
            (Ok(la), Ok(lb), Ok(d)) => nde_from_layers(&a.task, la, &b.task, lb, d, policy),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Err(e.clone()),
        };
        match attempt {
            Ok(rep) => {
                skipped_bins.extend(rep.skipped_bins);
                Some(rep.value)
            }
            Err(e) => {
                errors.push(format!("nde under {which} distribution: {e}"));
                None
            }
        }
    };
    let nde_t1_dist = nde_under(a.task.as_str(), &a.distribution);
    let nde_t2_dist = nde_under(b.task.as_str(), &b.distribution);
    skipped_bins.sort();
    skipped_bins.dedup();
    PairEntry {
        t1: a.task.clone(),
        t2: b.task.clone(),
        unmediated,
        nde_t1_dist,
        nde_t2_dist,
        ratio: ratio(nde_t1_dist, unmediated),
        ratio_t2_dist: ratio(nde_t2_dist, unmediated),
        skipped_bins,
        errors,
    }
}

/// Unmediated difference and both NDEs for every unordered pair of `tasks`,
/// in listing order. Per-pair failures are recorded in the entry.
pub fn pairwise_report(
    rs: &RecordSet,
    tasks: &[TaskId],
    spec: &BinSpec,
    settings: &AnalysisSettings,
) -> Result<PairwiseReport> {
    if tasks.len() < 2 {
        return Err(Error::Invalid(format!(
            "pairwise report needs at least 2 tasks, got {}",
            tasks.len()
        )));
    }
    for t in tasks {
        rs.variant(t)?;
    }
    let summaries: Vec<TaskSummary> = tasks
        .par_iter()
        .map(|t| TaskSummary::compute(rs, t, spec, settings))
        .collect();
    Ok(pairwise_from_summaries(&summaries, settings.missing_bins))
}

pub fn pairwise_from_summaries(summaries: &[TaskSummary], policy: MissingBinPolicy) -> PairwiseReport {
    let pairs: Vec<(usize, usize)> = (0..summaries.len())
        .flat_map(|i| (i + 1..summaries.len()).map(move |j| (i, j)))
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| pair_entry(&summaries[i], &summaries[j], policy))
        .collect();
    PairwiseReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(name: &str) -> TaskId {
        TaskId::new(name).unwrap()
    }

    fn layers(values: &[(Bin, f64)]) -> BinLayers {
        values.iter().copied().collect()
    }

    const B0: Bin = Bin { low: 0, high: Some(2) };
    const B1: Bin = Bin { low: 3, high: None };

    #[test]
    fn nde_examples() {
        let a = layers(&[(B0, 2.0), (B1, 6.0)]);
        let b = layers(&[(B0, 3.0), (B1, 5.0)]);
        let dist = ContextDistribution::new(BTreeMap::from([(B0, 0.25), (B1, 0.75)])).unwrap();
        let rep = nde_from_layers(&t("a"), &a, &t("b"), &b, &dist, MissingBinPolicy::Strict).unwrap();
        assert_eq!(rep.value, -0.5);
        assert_eq!(rep.per_bin_contributions[&B0], 0.25);
        assert_eq!(rep.per_bin_contributions[&B1], -0.75);

        let same = nde_from_layers(&t("a"), &a, &t("a"), &a, &dist, MissingBinPolicy::Strict).unwrap();
        assert_eq!(same.value, 0.0);

        let point = ContextDistribution::point_mass(B1);
        let rep = nde_from_layers(&t("a"), &a, &t("b"), &b, &point, MissingBinPolicy::Strict).unwrap();
        assert_eq!(rep.value, -1.0);
    }

    #[test]
    fn missing_bin_policy() {
        let a = layers(&[(B0, 2.0), (B1, 6.0)]);
        let b = layers(&[(B0, 3.0)]);
        let dist = ContextDistribution::new(BTreeMap::from([(B0, 0.25), (B1, 0.75)])).unwrap();
        let err = nde_from_layers(&t("a"), &a, &t("b"), &b, &dist, MissingBinPolicy::Strict).unwrap_err();
        assert!(matches!(err, Error::MissingBin { ref task, bin, .. } if task.as_str() == "b" && bin == B1));

        let rep = nde_from_layers(&t("a"), &a, &t("b"), &b, &dist, MissingBinPolicy::Renormalize).unwrap();
        assert_eq!(rep.value, 1.0);
        assert_eq!(rep.skipped_bins, vec![B1]);

        let only_missing = ContextDistribution::point_mass(B1);
        assert_eq!(
            nde_from_layers(&t("a"), &a, &t("b"), &b, &only_missing, MissingBinPolicy::Renormalize),
            Err(Error::AllBinsSkipped)
        );

        // zero-weight bins never trigger the policy
        let zero = ContextDistribution::new(BTreeMap::from([(B0, 1.0), (B1, 0.0)])).unwrap();
        assert!(nde_from_layers(&t("a"), &a, &t("b"), &b, &zero, MissingBinPolicy::Strict).is_ok());
    }

    #[test]
    fn divergence_flags() {
        let entry = PairEntry {
            t1: t("a"),
            t2: t("b"),
            unmediated: Some(0.02),
            nde_t1_dist: Some(1.2),
            nde_t2_dist: Some(-0.002),
            ratio: Some(60.0),
            ratio_t2_dist: Some(-0.1),
            skipped_bins: vec![],
            errors: vec![],
        };
        assert_eq!(
            entry.divergences(),
            [Divergence::Amplified, Divergence::Attenuated, Divergence::Reversed]
        );
        assert_eq!(ratio(Some(1.0), Some(0.0)), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist2() -> impl Strategy<Value = ContextDistribution> {
            (0.0f64..=1.0).prop_map(|p| ContextDistribution::new(BTreeMap::from([(B0, p), (B1, 1.0 - p)])).unwrap())
        }

        proptest! {
            #[test]
            fn linear_in_distribution(
                e in proptest::array::uniform4(1.0f64..12.0),
                d1 in dist2(), d2 in dist2(), lambda in 0.0f64..=1.0,
            ) {
                let a = layers(&[(B0, e[0]), (B1, e[1])]);
                let b = layers(&[(B0, e[2]), (B1, e[3])]);
                let n = |d: &ContextDistribution| nde_from_layers(&t("a"), &a, &t("b"), &b, d, MissingBinPolicy::Strict).unwrap().value;
                let mixed = ContextDistribution::mix(&d1, &d2, lambda).unwrap();
                prop_assert!((n(&mixed) - (lambda * n(&d1) + (1.0 - lambda) * n(&d2))).abs() <= 1e-9);
            }

            #[test]
            fn identical_layers_give_zero(e in proptest::array::uniform2(1.0f64..12.0), d in dist2()) {
                let a = layers(&[(B0, e[0]), (B1, e[1])]);
                let rep = nde_from_layers(&t("a"), &a, &t("b"), &a.clone(), &d, MissingBinPolicy::Strict).unwrap();
                prop_assert_eq!(rep.value, 0.0);
            }
        }
    }
}
