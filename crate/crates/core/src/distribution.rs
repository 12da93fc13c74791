//! What an adversarial choice of context-length distribution can do to
//! expected-layer conclusions.
//!
//! A task's expected layer under a distribution `P` is the convex combination
//! `sum_c P(c) * E(c)` of its per-bin values, so the set of attainable values
//! is the closed interval `[min E(c), max E(c)]`, with point masses on the
//! extreme bins attaining the endpoints. Tasks choose their distributions
//! independently, which makes the attainable task orderings exactly the
//! linear extensions consistent with the interval order on these intervals.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{Bin, ContextDistribution};
use crate::error::{Error, Result};
use crate::metrics::BinLayers;
use crate::record::TaskId;

/// `sum_c dist(c) * E(c)`. Every positively weighted bin must be defined.
pub fn distributional_expected_layer(per_bin: &BinLayers, dist: &ContextDistribution) -> Result<f64> {
    let mut total = 0.0;
    for (bin, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
        let e = per_bin
            .get(bin)
            .ok_or_else(|| Error::Distribution(format!("weight {w} on undefined bin {bin}")))?;
        total += w * e;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerInterval {
    pub task: TaskId,
    pub low: f64,
    pub high: f64,
    pub argmin_bin: Bin,
    pub argmax_bin: Bin,
}

impl LayerInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

/// Range of expected layers reachable by varying the distribution. Ties go to the lowest bin.
pub fn attainable_interval(task: &TaskId, per_bin: &BinLayers) -> Result<LayerInterval> {
    let mut it = per_bin.iter();
    let (first_bin, first) = it.next().ok_or_else(|| Error::NoDefinedBins(task.clone()))?;
    let mut iv = LayerInterval {
        task: task.clone(),
        low: first,
        high: first,
        argmin_bin: *first_bin,
        argmax_bin: *first_bin,
    };
    for (bin, v) in it {
        if v < iv.low {
            iv.low = v;
            iv.argmin_bin = *bin;
        }
        if v > iv.high {
            iv.high = v;
            iv.argmax_bin = *bin;
        }
    }
    Ok(iv)
}

/// Witness values for `order` (indices into `intervals`, lowest first), or
/// `None` if no strictly increasing choice with gaps `>= epsilon` exists.
///
/// Each value is pushed as low as its interval and the previous value allow;
/// that greedy choice fails only if every choice fails.
pub fn feasible(order: &[usize], intervals: &[LayerInterval], epsilon: f64) -> Option<Vec<f64>> {
    let mut values = Vec::with_capacity(order.len());
    let mut prev: Option<f64> = None;
    for &i in order {
        let iv = &intervals[i];
        let v = match prev {
            None => iv.low,
            Some(p) => iv.low.max(p + epsilon),
        };
        if v > iv.high {
            return None;
        }
        values.push(v);
        prev = Some(v);
    }
    Some(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Lowest expected layer first.
    pub order: Vec<TaskId>,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSet {
    pub tasks: Vec<TaskId>,
    pub rankings: Vec<Ranking>,
    pub count: usize,
}

impl RankingSet {
    /// Orders as index vectors into `tasks`.
    pub fn index_orders(&self) -> HashSet<Vec<usize>> {
        let pos: BTreeMap<&TaskId, usize> = self.tasks.iter().enumerate().map(|(i, t)| (t, i)).collect();
        self.rankings
            .iter()
            .map(|r| r.order.iter().map(|t| pos[t]).collect())
            .collect()
    }
}

fn extend(
    prefix: &mut Vec<usize>,
    values: &mut Vec<f64>,
    used: &mut [bool],
    intervals: &[LayerInterval],
    epsilon: f64,
    out: &mut Vec<(Vec<usize>, Vec<f64>)>,
) {
    if prefix.len() == intervals.len() {
        out.push((prefix.clone(), values.clone()));
        return;
    }
    for i in 0..intervals.len() {
        if used[i] {
            continue;
        }
        let iv = &intervals[i];
        let v = values.last().map_or(iv.low, |p| iv.low.max(p + epsilon));
        if v > iv.high {
            continue;
        }
        used[i] = true;
        prefix.push(i);
        values.push(v);
        extend(prefix, values, used, intervals, epsilon, out);
        values.pop();
        prefix.pop();
        used[i] = false;
    }
}

/// All strict orderings attainable by choosing each task's distribution
/// independently, in lexicographic order of interval indices.
///
/// Infeasible prefixes are pruned, so the work is bounded by `n!` but usually far less.
pub fn enumerate_rankings(intervals: &[LayerInterval], epsilon: f64, cap: usize) -> Result<RankingSet> {
    let n = intervals.len();
    if n == 0 {
        return Err(Error::Invalid("no intervals to rank".into()));
    }
    if n > cap {
        return Err(Error::TooManyTasks { count: n, cap });
    }
    let found: Vec<Vec<(Vec<usize>, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut used = vec![false; n];
            used[first] = true;
            extend(
                &mut vec![first],
                &mut vec![intervals[first].low],
                &mut used,
                intervals,
                epsilon,
                &mut out,
            );
            out
        })
        .collect();
    let rankings: Vec<Ranking> = found
        .into_iter()
        .flatten()
        .map(|(order, witness)| Ranking {
            order: order.iter().map(|&i| intervals[i].task.clone()).collect(),
            witness,
        })
        .collect();
    Ok(RankingSet {
        tasks: intervals.iter().map(|iv| iv.task.clone()).collect(),
        count: rankings.len(),
        rankings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    /// A is below B in every shared bin.
    ABelow,
    /// A is above B in every shared bin.
    AAbove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxWitness {
    pub task_a: TaskId,
    pub task_b: TaskId,
    pub dominance: Dominance,
    /// `(bin, E_a, E_b)` for every shared defined bin.
    pub shared_bins: Vec<(Bin, f64, f64)>,
    pub distribution_a: ContextDistribution,
    pub distribution_b: ContextDistribution,
    pub aggregate_a: f64,
    pub aggregate_b: f64,
    /// How far the aggregates cross, in layers (positive).
    pub margin: f64,
}

/// Looks for a Simpson's-paradox pair: uniform per-bin dominance that some
/// pair of distributions reverses in aggregate.
///
/// The witness puts a point mass on the dominated task's highest bin and on
/// the dominating task's lowest bin. The reversal must exceed `epsilon`.
pub fn detect_paradox(
    task_a: &TaskId,
    per_bin_a: &BinLayers,
    task_b: &TaskId,
    per_bin_b: &BinLayers,
    epsilon: f64,
) -> Result<Option<ParadoxWitness>> {
    let shared: Vec<(Bin, f64, f64)> = per_bin_a
        .iter()
        .filter_map(|(bin, a)| per_bin_b.get(bin).map(|b| (*bin, a, b)))
        .collect();
    if shared.is_empty() {
        return Err(Error::NoSharedBins(task_a.clone(), task_b.clone()));
    }
    let dominance = if shared.iter().all(|(_, a, b)| a < b) {
        Dominance::ABelow
    } else if shared.iter().all(|(_, a, b)| a > b) {
        Dominance::AAbove
    } else {
        return Ok(None);
    };
    let ia = attainable_interval(task_a, per_bin_a)?;
    let ib = attainable_interval(task_b, per_bin_b)?;
    let (bin_a, bin_b) = match dominance {
        Dominance::ABelow => (ia.argmax_bin, ib.argmin_bin),
        Dominance::AAbove => (ia.argmin_bin, ib.argmax_bin),
    };
    let distribution_a = ContextDistribution::point_mass(bin_a);
    let distribution_b = ContextDistribution::point_mass(bin_b);
    let aggregate_a = distributional_expected_layer(per_bin_a, &distribution_a)?;
    let aggregate_b = distributional_expected_layer(per_bin_b, &distribution_b)?;
    let margin = match dominance {
        Dominance::ABelow => aggregate_a - aggregate_b,
        Dominance::AAbove => aggregate_b - aggregate_a,
    };
    if margin <= epsilon {
        return Ok(None);
    }
    Ok(Some(ParadoxWitness {
        task_a: task_a.clone(),
        task_b: task_b.clone(),
        dominance,
        shared_bins: shared,
        distribution_a,
        distribution_b,
        aggregate_a,
        aggregate_b,
        margin,
    }))
}

/// `(high_a - low_b, low_a - high_b)`: the largest and smallest attainable `E_a - E_b`.
pub fn extreme_differences(a: &LayerInterval, b: &LayerInterval) -> (f64, f64) {
    (a.high - b.low, a.low - b.high)
}

/// A distribution attaining `target` exactly, blending the argmin and argmax bins.
pub fn synthesize_distribution(task: &TaskId, per_bin: &BinLayers, target: f64) -> Result<ContextDistribution> {
    let iv = attainable_interval(task, per_bin)?;
    if !(iv.low..=iv.high).contains(&target) {
        return Err(Error::TargetOutOfRange {
            target,
            low: iv.low,
            high: iv.high,
        });
    }
    if iv.argmin_bin == iv.argmax_bin || target == iv.low {
        return Ok(ContextDistribution::point_mass(iv.argmin_bin));
    }
    if target == iv.high {
        return Ok(ContextDistribution::point_mass(iv.argmax_bin));
    }
    let w_high = (target - iv.low) / (iv.high - iv.low);
    ContextDistribution::new(BTreeMap::from([(iv.argmin_bin, 1.0 - w_high), (iv.argmax_bin, w_high)]))
}
