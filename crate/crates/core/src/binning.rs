//! Context-length bins and mediator distributions over them.
//!
//! Bins have a fixed width and a lumped tail: with width 3 and tail start 9
//! the bins are `0-2`, `3-5`, `6-8` and `9+`. Records never store bin labels;
//! bins are assigned at analysis time from raw context lengths.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{RecordSet, TaskId};

/// Tolerance on the total mass of a [`ContextDistribution`].
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-12;

/// A contiguous range of context lengths, `[low, high]` or `[low, ∞)` for the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bin {
    pub low: u64,
    pub high: Option<u64>,
}

impl Bin {
    pub fn closed(low: u64, high: u64) -> Self {
        Self { low, high: Some(high) }
    }

    pub fn tail(low: u64) -> Self {
        Self { low, high: None }
    }

    pub fn contains(&self, c: u64) -> bool {
        c >= self.low && self.high.is_none_or(|h| c <= h)
    }

    pub fn is_tail(&self) -> bool {
        self.high.is_none()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Parses `"i-j"` or `"k+"`.
    pub fn parse(label: &str) -> Result<Self> {
        let bad = || Error::BinSpec(format!("bad bin label {label:?}"));
        if let Some(low) = label.strip_suffix('+') {
            return low.parse().map(Bin::tail).map_err(|_| bad());
        }
        let (lo, hi) = label.split_once('-').ok_or_else(bad)?;
        let lo: u64 = lo.parse().map_err(|_| bad())?;
        let hi: u64 = hi.parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(Bin::closed(lo, hi))
    }
}

impl fmt::Display for Bin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.high {
            Some(h) => write!(f, "{}-{}", self.low, h),
            None => write!(f, "{}+", self.low),
        }
    }
}

impl From<Bin> for String {
    fn from(b: Bin) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Bin {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Bin::parse(&s)
    }
}

/// Fixed-width bins with every length `>= tail_start` lumped into one tail bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBinSpec")]
pub struct BinSpec {
    width: u64,
    tail_start: u64,
}

#[derive(Deserialize)]
struct RawBinSpec {
    width: u64,
    tail_start: u64,
}

impl TryFrom<RawBinSpec> for BinSpec {
    type Error = Error;

    fn try_from(raw: RawBinSpec) -> Result<Self> {
        BinSpec::new(raw.width, raw.tail_start)
    }
}

impl BinSpec {
    pub fn new(width: u64, tail_start: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::BinSpec("width must be at least 1".into()));
        }
        if !tail_start.is_multiple_of(width) {
            return Err(Error::BinSpec(format!(
                "tail start {tail_start} is not a multiple of width {width}"
            )));
        }
        Ok(Self { width, tail_start })
    }

    /// Width-aligned spec whose tail starts at the largest multiple of `width` not above `threshold`.
    pub fn aligned(width: u64, threshold: u64) -> Result<Self> {
        if width == 0 {
            return Err(Error::BinSpec("width must be at least 1".into()));
        }
        Self::new(width, threshold / width * width)
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn tail_start(&self) -> u64 {
        self.tail_start
    }

    /// All bins in increasing order; the last one is the tail.
    pub fn bins(&self) -> Vec<Bin> {
        let mut out: Vec<Bin> = (0..self.tail_start / self.width)
            .map(|k| Bin::closed(k * self.width, (k + 1) * self.width - 1))
            .collect();
        out.push(Bin::tail(self.tail_start));
        out
    }

    pub fn assign(&self, c: u64) -> Bin {
        if c >= self.tail_start {
            Bin::tail(self.tail_start)
        } else {
            let low = c / self.width * self.width;
            Bin::closed(low, low + self.width - 1)
        }
    }
}

/// Free-function form of [`BinSpec::assign`].
pub fn assign_bin(c: u64, spec: &BinSpec) -> Bin {
    spec.assign(c)
}

/// Probability vector over bins: the mediator distribution `P(C = c | T = t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Bin, f64>", into = "BTreeMap<Bin, f64>")]
pub struct ContextDistribution {
    weights: BTreeMap<Bin, f64>,
}

impl ContextDistribution {
    pub fn new(weights: BTreeMap<Bin, f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Distribution("no bins".into()));
        }
        if let Some((b, w)) = weights.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::Distribution(format!("bin {b} has weight {w}")));
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(Error::Distribution(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes arbitrary non-negative masses.
    pub fn from_masses(masses: BTreeMap<Bin, f64>) -> Result<Self> {
        let total: f64 = masses.values().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Distribution(format!("total mass {total} is not positive")));
        }
        Self::new(masses.into_iter().map(|(b, m)| (b, m / total)).collect())
    }

    pub fn point_mass(bin: Bin) -> Self {
        Self {
            weights: BTreeMap::from([(bin, 1.0)]),
        }
    }

    pub fn uniform(bins: &[Bin]) -> Result<Self> {
        Self::from_masses(bins.iter().map(|b| (*b, 1.0)).collect())
    }

    /// `lambda * a + (1 - lambda) * b`, over the union of supports.
    pub fn mix(a: &Self, b: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Distribution(format!("mixture weight {lambda} outside [0, 1]")));
        }
        let mut out: BTreeMap<Bin, f64> = BTreeMap::new();
        for (bin, w) in &a.weights {
            *out.entry(*bin).or_default() += lambda * w;
        }
        for (bin, w) in &b.weights {
            *out.entry(*bin).or_default() += (1.0 - lambda) * w;
        }
        Self::new(out)
    }

    pub fn weight(&self, bin: &Bin) -> f64 {
        self.weights.get(bin).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<Bin, f64> {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bin, f64)> {
        self.weights.iter().map(|(b, w)| (b, *w))
    }
}

impl TryFrom<BTreeMap<Bin, f64>> for ContextDistribution {
    type Error = Error;

    fn try_from(weights: BTreeMap<Bin, f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<ContextDistribution> for BTreeMap<Bin, f64> {
    fn from(d: ContextDistribution) -> Self {
        d.weights
    }
}

fn task_lengths(rs: &RecordSet, task: &TaskId) -> Result<Vec<u64>> {
    Ok(rs.records_for(task)?.into_iter().map(|r| r.context_length()).collect())
}

/// Record count per bin, every bin of `spec` included.
pub fn bin_counts(rs: &RecordSet, task: &TaskId, spec: &BinSpec) -> Result<Vec<(Bin, usize)>> {
    let mut counts: BTreeMap<Bin, usize> = spec.bins().into_iter().map(|b| (b, 0)).collect();
    for c in task_lengths(rs, task)? {
        *counts.entry(spec.assign(c)).or_default() += 1;
    }
    Ok(counts.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: u64,
    pub total: usize,
    /// Records with context length `>= threshold`.
    pub tail_count: usize,
    /// False when the task has fewer than `min_tail` records and 0 was returned.
    pub sufficient: bool,
}

/// Largest threshold `t` in `0..=max_length` such that at least `min_tail`
/// records have context length `>= t`.
pub fn choose_max_threshold(rs: &RecordSet, task: &TaskId, min_tail: usize) -> Result<ThresholdChoice> {
    let mut lengths = task_lengths(rs, task)?;
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    let total = lengths.len();
    if total < min_tail || total == 0 {
        return Ok(ThresholdChoice {
            threshold: 0,
            total,
            tail_count: total,
            sufficient: false,
        });
    }
    // the min_tail-th largest length; with min_tail = 0 every threshold qualifies
    let threshold = lengths[min_tail.saturating_sub(1)];
    let tail_count = lengths.iter().take_while(|&&c| c >= threshold).count();
    Ok(ThresholdChoice {
        threshold,
        total,
        tail_count,
        sufficient: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinFraction {
    pub bin: Bin,
    pub count: usize,
    pub fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    pub task: TaskId,
    pub total: usize,
    pub min_fraction: f64,
    pub bins: Vec<BinFraction>,
    pub pass: bool,
}

/// Checks that every bin holds at least `min_frac` of the task's records (inclusive).
pub fn validate_min_fraction(rs: &RecordSet, task: &TaskId, spec: &BinSpec, min_frac: f64) -> Result<FractionReport> {
    let counts = bin_counts(rs, task, spec)?;
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    let bins: Vec<BinFraction> = counts
        .into_iter()
        .map(|(bin, count)| {
            let fraction = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            BinFraction {
                bin,
                count,
                fraction,
                pass: total > 0 && fraction >= min_frac - DISTRIBUTION_SUM_TOLERANCE,
            }
        })
        .collect();
    Ok(FractionReport {
        task: task.clone(),
        total,
        min_fraction: min_frac,
        pass: bins.iter().all(|b| b.pass),
        bins,
    })
}

/// Share of the task's records in each bin of `spec` (zero-weight bins included).
pub fn empirical_distribution(rs: &RecordSet, task: &TaskId, spec: &BinSpec) -> Result<ContextDistribution> {
    let counts = bin_counts(rs, task, spec)?;
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(Error::EmptyTask(task.clone()));
    }
    ContextDistribution::new(counts.into_iter().map(|(b, n)| (b, n as f64 / total as f64)).collect())
}
