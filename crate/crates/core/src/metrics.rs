//! Layer scores, differential scores and the expected-layer summary.
//!
//! For cumulative probes `P(0), P(1), ..., P(L)` the differential score is
//! `delta(l) = score(l) - score(l - 1)` for `l = 1..=L`, and the expected
//! layer is `sum(l * delta(l)) / sum(delta(l))`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::binning::{Bin, BinSpec};
use crate::error::{Error, Result};
use crate::record::{LayerOutcome, OutcomeVariant, ProbeRecord, RecordSet, TaskId};

/// `|sum(delta)|` at or below this makes the expected layer undefined.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreAggregator {
    /// Weighted mean of binary outcomes (accuracy).
    MeanOutcome,
    /// F1 from weighted sums of tp / fp / fn.
    MicroF1,
}

impl ScoreAggregator {
    pub fn for_variant(variant: OutcomeVariant) -> Self {
        match variant {
            OutcomeVariant::Binary => ScoreAggregator::MeanOutcome,
            OutcomeVariant::Counts => ScoreAggregator::MicroF1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreAggregator::MeanOutcome => "mean-outcome",
            ScoreAggregator::MicroF1 => "micro-f1",
        }
    }

    pub fn check(self, variant: OutcomeVariant) -> Result<()> {
        if Self::for_variant(variant) == self {
            Ok(())
        } else {
            Err(Error::VariantMismatch {
                aggregator: self.name(),
                variant: variant.name(),
            })
        }
    }
}

/// Weighted per-layer sums from which a score profile is derived.
///
/// Tallies are additive, so disjoint subsets can be scored independently and merged.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTally {
    agg: ScoreAggregator,
    weight: f64,
    count: usize,
    // mean-outcome: [correct, 0, 0]; micro-f1: [tp, fp, fn]
    sums: Vec<[f64; 3]>,
}

impl LayerTally {
    pub fn new(agg: ScoreAggregator, layer_count: usize) -> Self {
        Self {
            agg,
            weight: 0.0,
            count: 0,
            sums: vec![[0.0; 3]; layer_count + 1],
        }
    }

    pub fn add(&mut self, record: &ProbeRecord, weight: f64) -> Result<()> {
        if record.outcomes.len() != self.sums.len() {
            return Err(Error::LayerCountMismatch {
                found: record.outcomes.len().saturating_sub(1),
                expected: self.sums.len() - 1,
            });
        }
        for (slot, outcome) in self.sums.iter_mut().zip(&record.outcomes) {
            match (self.agg, outcome) {
                (ScoreAggregator::MeanOutcome, LayerOutcome::Correct(c)) => {
                    if *c {
                        slot[0] += weight;
                    }
                }
                (ScoreAggregator::MicroF1, LayerOutcome::Counts(k)) => {
                    slot[0] += weight * k.tp as f64;
                    slot[1] += weight * k.fp as f64;
                    slot[2] += weight * k.fn_ as f64;
                }
                (agg, o) => {
                    return Err(Error::VariantMismatch {
                        aggregator: agg.name(),
                        variant: o.variant().name(),
                    })
                }
            }
        }
        self.weight += weight;
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &LayerTally) {
        debug_assert_eq!(self.sums.len(), other.sums.len());
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
        self.weight += other.weight;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn profile(&self) -> Result<LayerScoreProfile> {
        if self.count == 0 {
            return Err(Error::EmptySubset);
        }
        if self.weight <= 0.0 {
            return Err(Error::ZeroWeights);
        }
        let scores = self
            .sums
            .iter()
            .map(|s| match self.agg {
                ScoreAggregator::MeanOutcome => (s[0] / self.weight).clamp(0.0, 1.0),
                ScoreAggregator::MicroF1 => f1(s[0], s[1], s[2]),
            })
            .collect();
        Ok(LayerScoreProfile(scores))
    }
}

/// F1 = 2tp / (2tp + fp + fn); 0 when nothing was predicted or expected.
fn f1(tp: f64, fp: f64, fn_: f64) -> f64 {
    let denom = 2.0 * tp + fp + fn_;
    if denom > 0.0 {
        2.0 * tp / denom
    } else {
        0.0
    }
}

/// `score(l)` for `l = 0..=L`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScoreProfile(Vec<f64>);

impl LayerScoreProfile {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::Invalid("a score profile needs at least layers 0 and 1".into()));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Invalid(format!("score {s} outside [0, 1]")));
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[f64] {
        &self.0
    }

    pub fn layer_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn delta(&self) -> DeltaVector {
        delta(self)
    }
}

/// `delta(l)` for `l = 1..=L`, stored at index `l - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector(Vec<f64>);

impl DeltaVector {
    pub fn new(deltas: Vec<f64>) -> Self {
        Self(deltas)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn layer_count(&self) -> usize {
        self.0.len()
    }

    /// Negative entries replaced by zero.
    pub fn clamped(&self) -> Self {
        Self(self.0.iter().map(|d| d.max(0.0)).collect())
    }

    /// Rebuilds `score(0..=L)` from the `l = 0` anchor.
    pub fn cumulative(&self, anchor: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(anchor);
        let mut acc = anchor;
        for d in &self.0 {
            acc += d;
            out.push(acc);
        }
        out
    }

    pub fn expected_layer(&self) -> Result<f64> {
        expected_layer(self)
    }
}

pub fn delta(profile: &LayerScoreProfile) -> DeltaVector {
    DeltaVector(profile.0.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Gain-weighted mean layer index. Fails when the total gain is within
/// [`DEGENERATE_TOLERANCE`] of zero.
pub fn expected_layer(d: &DeltaVector) -> Result<f64> {
    let total: f64 = d.0.iter().sum();
    if !total.is_finite() || total.abs() <= DEGENERATE_TOLERANCE {
        return Err(Error::UndefinedExpectedLayer { total });
    }
    // normalizing first keeps a one-hot vector exact
    Ok(d.0.iter().enumerate().map(|(i, v)| (i + 1) as f64 * (v / total)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedLayer {
    pub value: f64,
    pub support: usize,
}

/// Scores `records` with optional per-record weights.
pub fn score_profile(
    records: &[&ProbeRecord],
    agg: ScoreAggregator,
    weights: Option<&[f64]>,
) -> Result<LayerScoreProfile> {
    let first = records.first().ok_or(Error::EmptySubset)?;
    if let Some(w) = weights {
        if w.len() != records.len() {
            return Err(Error::Invalid(format!(
                "{} weights for {} records",
                w.len(),
                records.len()
            )));
        }
        if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Invalid(format!(
                "record weight {bad} is not a non-negative number"
            )));
        }
    }
    let mut tally = LayerTally::new(agg, first.outcomes.len().saturating_sub(1));
    for (i, r) in records.iter().enumerate() {
        tally.add(r, weights.map_or(1.0, |w| w[i]))?;
    }
    tally.profile()
}

fn tally_expected_layer(tally: &LayerTally, clamp: bool) -> Result<ExpectedLayer> {
    let d = tally.profile()?.delta();
    let d = if clamp { d.clamped() } else { d };
    Ok(ExpectedLayer {
        value: expected_layer(&d)?,
        support: tally.count(),
    })
}

/// Expected layer over an arbitrary record subset.
pub fn subset_expected_layer(records: &[&ProbeRecord], agg: ScoreAggregator, clamp: bool) -> Result<ExpectedLayer> {
    let first = records.first().ok_or(Error::EmptySubset)?;
    let mut tally = LayerTally::new(agg, first.outcomes.len().saturating_sub(1));
    for r in records {
        tally.add(r, 1.0)?;
    }
    tally_expected_layer(&tally, clamp)
}

/// Expected layer of a task over all of its records.
pub fn task_expected_layer(rs: &RecordSet, task: &TaskId, agg: ScoreAggregator, clamp: bool) -> Result<ExpectedLayer> {
    agg.check(rs.variant(task)?)?;
    let records = rs.records_for(task)?;
    if records.is_empty() {
        return Err(Error::EmptyTask(task.clone()));
    }
    subset_expected_layer(&records, agg, clamp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    Ok,
    /// Value computed but support is below the reporting floor.
    LowSupport,
    /// Total gain is zero; no value.
    Degenerate,
    /// No records.
    Empty,
}

fn classify(tally: &LayerTally, clamp: bool, min_support: usize) -> Result<(Option<f64>, EstimateFlag)> {
    if tally.count() == 0 {
        return Ok((None, EstimateFlag::Empty));
    }
    match tally_expected_layer(tally, clamp) {
        Ok(e) if e.support < min_support => Ok((Some(e.value), EstimateFlag::LowSupport)),
        Ok(e) => Ok((Some(e.value), EstimateFlag::Ok)),
        Err(Error::UndefinedExpectedLayer { .. }) => Ok((None, EstimateFlag::Degenerate)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: u64,
    pub support: usize,
    pub expected_layer: Option<f64>,
    pub flag: EstimateFlag,
}

/// Expected layer over records with context length `<= thr`, for each `thr`.
///
/// Empty or degenerate subsets become gaps in the curve rather than errors.
pub fn expected_layer_by_threshold(
    rs: &RecordSet,
    task: &TaskId,
    agg: ScoreAggregator,
    thresholds: RangeInclusive<u64>,
    clamp: bool,
) -> Result<Vec<ThresholdPoint>> {
    agg.check(rs.variant(task)?)?;
    let mut records: Vec<(u64, &ProbeRecord)> = rs.task_records(task).map(|r| (r.context_length(), r)).collect();
    records.sort_by_key(|(c, _)| *c);
    let mut tally = LayerTally::new(agg, rs.layer_count());
    let mut next = 0;
    let mut out = Vec::new();
    for thr in thresholds {
        while next < records.len() && records[next].0 <= thr {
            tally.add(records[next].1, 1.0)?;
            next += 1;
        }
        let (expected_layer, flag) = classify(&tally, clamp, 0)?;
        out.push(ThresholdPoint {
            threshold: thr,
            support: tally.count(),
            expected_layer,
            flag,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub bin: Bin,
    pub support: usize,
    pub expected_layer: Option<f64>,
    pub flag: EstimateFlag,
}

/// Per-bin expected layers (the controlled effect) of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub task: TaskId,
    pub entries: Vec<BinEstimate>,
}

impl BinTable {
    pub fn get(&self, bin: &Bin) -> Option<&BinEstimate> {
        self.entries.iter().find(|e| e.bin == *bin)
    }

    /// Bins usable downstream: flagged `Ok`, plus `LowSupport` when requested.
    pub fn defined(&self, include_low_support: bool) -> BinLayers {
        BinLayers(
            self.entries
                .iter()
                .filter(|e| match e.flag {
                    EstimateFlag::Ok => true,
                    EstimateFlag::LowSupport => include_low_support,
                    _ => false,
                })
                .filter_map(|e| e.expected_layer.map(|v| (e.bin, v)))
                .collect(),
        )
    }
}

/// Defined per-bin expected layers of one task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinLayers(pub BTreeMap<Bin, f64>);

impl BinLayers {
    pub fn get(&self, bin: &Bin) -> Option<f64> {
        self.0.get(bin).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bin, f64)> {
        self.0.iter().map(|(b, v)| (b, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Bin, f64)> for BinLayers {
    fn from_iter<I: IntoIterator<Item = (Bin, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Expected layer per bin of `spec`. Every bin is reported; empty, degenerate
/// and below-`min_support` bins are flagged rather than dropped.
pub fn expected_layer_by_bin(
    rs: &RecordSet,
    task: &TaskId,
    agg: ScoreAggregator,
    spec: &BinSpec,
    clamp: bool,
    min_support: usize,
) -> Result<BinTable> {
    agg.check(rs.variant(task)?)?;
    let mut tallies: BTreeMap<Bin, LayerTally> = spec
        .bins()
        .into_iter()
        .map(|b| (b, LayerTally::new(agg, rs.layer_count())))
        .collect();
    for r in rs.task_records(task) {
        let bin = spec.assign(r.context_length());
        tallies
            .get_mut(&bin)
            .expect("spec.assign returns one of spec.bins()")
            .add(r, 1.0)?;
    }
    let entries = tallies
        .into_iter()
        .map(|(bin, tally)| {
            let (expected_layer, flag) = classify(&tally, clamp, min_support)?;
            Ok(BinEstimate {
                bin,
                support: tally.count(),
                expected_layer,
                flag,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BinTable {
        task: task.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Counts, Span};

    fn brec(task: &str, len: u64, outcomes: &[u8]) -> ProbeRecord {
        ProbeRecord {
            task: TaskId::new(task).unwrap(),
            example_id: String::new(),
            span1: Span::new(0, len),
            span2: None,
            outcomes: outcomes.iter().map(|&o| LayerOutcome::Correct(o == 1)).collect(),
        }
    }

    fn one_hot(l: usize, layers: usize) -> DeltaVector {
        DeltaVector::new((1..=layers).map(|k| if k == l { 1.0 } else { 0.0 }).collect())
    }

    #[test]
    fn profile_examples() {
        let a = brec("a", 0, &[1, 1, 1]);
        let b = brec("a", 0, &[1, 1, 1]);
        let p = score_profile(&[&a, &b], ScoreAggregator::MeanOutcome, None).unwrap();
        assert_eq!(p.scores(), [1.0, 1.0, 1.0]);

        let c = brec("a", 0, &[0, 1, 1]);
        let d = brec("a", 0, &[0, 0, 1]);
        let p = score_profile(&[&c, &d], ScoreAggregator::MeanOutcome, None).unwrap();
        assert_eq!(p.scores(), [0.0, 0.5, 1.0]);

        let w = score_profile(&[&c, &d], ScoreAggregator::MeanOutcome, Some(&[3.0, 1.0])).unwrap();
        assert_eq!(w.scores()[1], 0.75);

        let k = ProbeRecord {
            outcomes: vec![LayerOutcome::Counts(Counts { tp: 1, fp: 1, fn_: 0 }); 2],
            ..brec("c", 0, &[])
        };
        let p = score_profile(&[&k, &k], ScoreAggregator::MicroF1, None).unwrap();
        assert!((p.scores()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn profile_errors() {
        let a = brec("a", 0, &[1, 1]);
        assert_eq!(
            score_profile(&[], ScoreAggregator::MeanOutcome, None),
            Err(Error::EmptySubset)
        );
        assert!(matches!(
            score_profile(&[&a], ScoreAggregator::MicroF1, None),
            Err(Error::VariantMismatch { .. })
        ));
        assert_eq!(
            score_profile(&[&a], ScoreAggregator::MeanOutcome, Some(&[0.0])),
            Err(Error::ZeroWeights)
        );
    }

    #[test]
    fn f1_with_no_positives_is_zero() {
        assert_eq!(f1(0.0, 0.0, 0.0), 0.0);
        assert_eq!(f1(2.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn delta_examples() {
        let p = LayerScoreProfile::new(vec![0.5, 0.7, 0.8]).unwrap();
        let d = p.delta();
        assert!((d.values()[0] - 0.2).abs() < 1e-15 && (d.values()[1] - 0.1).abs() < 1e-15);
        let flat = LayerScoreProfile::new(vec![0.4; 5]).unwrap();
        assert!(flat.delta().values().iter().all(|v| *v == 0.0));
        let dip = LayerScoreProfile::new(vec![0.5, 0.3, 0.9]).unwrap().delta();
        assert!(dip.values()[0] < 0.0);
        assert_eq!(dip.clamped().values()[0], 0.0);
        assert!(LayerScoreProfile::new(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn expected_layer_examples() {
        assert_eq!(expected_layer(&one_hot(3, 12)).unwrap(), 3.0);
        assert_eq!(expected_layer(&DeltaVector::new(vec![1.0 / 12.0; 12])).unwrap(), 6.5);
        let mut two = vec![0.0; 12];
        two[1] = 0.2;
        two[9] = 0.2;
        assert!((expected_layer(&DeltaVector::new(two)).unwrap() - 6.0).abs() < 1e-12);
        assert!(matches!(
            expected_layer(&DeltaVector::new(vec![0.0; 12])),
            Err(Error::UndefinedExpectedLayer { .. })
        ));
        assert!(expected_layer(&DeltaVector::new(vec![0.3, -0.3])).is_err());
    }

    fn set(records: Vec<ProbeRecord>) -> RecordSet {
        RecordSet::from_records(records[0].outcomes.len() - 1, records).unwrap()
    }

    #[test]
    fn threshold_curve() {
        // short contexts resolve at layer 1, long ones at layer 2
        let rs = set(vec![
            brec("a", 0, &[0, 1, 1]),
            brec("a", 1, &[0, 1, 1]),
            brec("a", 5, &[0, 0, 1]),
            brec("a", 5, &[0, 0, 1]),
        ]);
        let t = TaskId::new("a").unwrap();
        let curve = expected_layer_by_threshold(&rs, &t, ScoreAggregator::MeanOutcome, 0..=6, false).unwrap();
        let values: Vec<Option<f64>> = curve.iter().map(|p| p.expected_layer).collect();
        assert_eq!(
            values,
            [
                Some(1.0),
                Some(1.0),
                Some(1.0),
                Some(1.0),
                Some(1.0),
                Some(1.5),
                Some(1.5)
            ]
        );
        assert_eq!(curve[6].support, 4);
        let full = task_expected_layer(&rs, &t, ScoreAggregator::MeanOutcome, false).unwrap();
        assert_eq!(curve[6].expected_layer, Some(full.value));

        let flat = set(vec![brec("a", 3, &[0, 0, 0])]);
        let curve = expected_layer_by_threshold(&flat, &t, ScoreAggregator::MeanOutcome, 0..=4, false).unwrap();
        assert_eq!(curve[0].flag, EstimateFlag::Empty);
        assert_eq!(curve[3].flag, EstimateFlag::Degenerate);
    }

    #[test]
    fn by_bin_flags_and_symmetry() {
        let spec = BinSpec::new(3, 6).unwrap();
        let mut recs = vec![];
        for _ in 0..3 {
            recs.push(brec("a", 1, &[0, 1, 1]));
            recs.push(brec("a", 4, &[0, 1, 1]));
        }
        recs.push(brec("a", 7, &[1, 1, 1]));
        let rs = set(recs);
        let t = TaskId::new("a").unwrap();
        let table = expected_layer_by_bin(&rs, &t, ScoreAggregator::MeanOutcome, &spec, false, 2).unwrap();
        let flags: Vec<EstimateFlag> = table.entries.iter().map(|e| e.flag).collect();
        assert_eq!(flags, [EstimateFlag::Ok, EstimateFlag::Ok, EstimateFlag::Degenerate]);
        assert_eq!(table.entries[0].expected_layer, table.entries[1].expected_layer);
        assert_eq!(table.defined(false).len(), 2);

        let table = expected_layer_by_bin(&rs, &t, ScoreAggregator::MeanOutcome, &spec, false, 30).unwrap();
        assert!(table.entries[..2].iter().all(|e| e.flag == EstimateFlag::LowSupport));
        assert!(table.defined(false).is_empty());
        assert_eq!(table.defined(true).len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cumulative_recovers_profile(scores in proptest::collection::vec(0.0f64..=1.0, 2..14)) {
                let p = LayerScoreProfile::new(scores.clone()).unwrap();
                let back = p.delta().cumulative(scores[0]);
                for (a, b) in back.iter().zip(&scores) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn rescaling_invariant(d in proptest::collection::vec(0.0f64..1.0, 12), k in 0.01f64..100.0) {
                prop_assume!(d.iter().sum::<f64>() > 1e-3);
                let a = expected_layer(&DeltaVector::new(d.clone())).unwrap();
                let b = expected_layer(&DeltaVector::new(d.iter().map(|v| v * k).collect())).unwrap();
                prop_assert!((a - b).abs() <= 1e-9);
            }

            #[test]
            fn nonnegative_deltas_bounded(d in proptest::collection::vec(0.0f64..1.0, 1..13)) {
                prop_assume!(d.iter().sum::<f64>() > 1e-9);
                let layers = d.len() as f64;
                let e = expected_layer(&DeltaVector::new(d)).unwrap();
                prop_assert!((1.0 - 1e-12..=layers + 1e-12).contains(&e));
            }

            #[test]
            fn mean_outcome_decomposes(
                a in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..30),
                b in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..30),
            ) {
                let mk = |v: &Vec<bool>| brec("a", 0, &v.iter().map(|x| u8::from(*x)).collect::<Vec<_>>());
                let ra: Vec<ProbeRecord> = a.iter().map(mk).collect();
                let rb: Vec<ProbeRecord> = b.iter().map(mk).collect();
                let refs_a: Vec<&ProbeRecord> = ra.iter().collect();
                let refs_b: Vec<&ProbeRecord> = rb.iter().collect();
                let both: Vec<&ProbeRecord> = ra.iter().chain(&rb).collect();
                let pa = score_profile(&refs_a, ScoreAggregator::MeanOutcome, None).unwrap();
                let pb = score_profile(&refs_b, ScoreAggregator::MeanOutcome, None).unwrap();
                let pab = score_profile(&both, ScoreAggregator::MeanOutcome, None).unwrap();
                let (na, nb) = (ra.len() as f64, rb.len() as f64);
                for l in 0..4 {
                    let mixed = (na * pa.scores()[l] + nb * pb.scores()[l]) / (na + nb);
                    prop_assert!((mixed - pab.scores()[l]).abs() <= 1e-12);
                }
            }
        }
    }
}
