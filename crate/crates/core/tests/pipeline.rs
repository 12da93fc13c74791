use std::collections::BTreeMap;
use std::io::Cursor;

use mediprobe_core::binning::empirical_distribution;
use mediprobe_core::mediation::{natural_expected_layer, nde, nde_from_layers, unmediated_difference};
use mediprobe_core::metrics::{expected_layer_by_threshold, EstimateFlag, ScoreAggregator};
use mediprobe_core::record::{ingest, serialize};
use mediprobe_core::settings::{AnalysisSettings, MissingBinPolicy, UnmediatedMode};
use mediprobe_core::synth::{generate, step_profile, Allocation, OutcomeMode, PlantedBin, ScenarioSpec, TaskScenario};
use mediprobe_core::{Bin, BinLayers, BinSpec, ContextDistribution, Error, TaskId};

fn tid(s: &str) -> TaskId {
    TaskId::new(s).unwrap()
}

fn task(name: &str, samples: usize, bins: &[(&str, f64, usize)]) -> TaskScenario {
    TaskScenario {
        name: tid(name),
        samples,
        two_spans: true,
        bins: bins
            .iter()
            .map(|&(label, weight, step)| {
                let profile = step_profile(12, step, 0.2, 0.8);
                (Bin::parse(label).unwrap(), PlantedBin { weight, profile })
            })
            .collect(),
    }
}

fn spec(tasks: Vec<TaskScenario>) -> ScenarioSpec {
    ScenarioSpec {
        layers: 12,
        binning: BinSpec::new(3, 9).unwrap(),
        tail_extent: None,
        mode: OutcomeMode::Monotone,
        allocation: Allocation::Exact,
        seed: 42,
        tasks,
    }
}

#[test]
fn threshold_curve_moves_from_short_to_pooled_regime() {
    let s = spec(vec![task("coref", 20_000, &[("0-2", 0.5, 2), ("9+", 0.5, 8)])]);
    let rs = generate(&s).unwrap();
    let curve = expected_layer_by_threshold(&rs, &tid("coref"), ScoreAggregator::MeanOutcome, 0..=12, false).unwrap();
    assert_eq!(curve.len(), 13);
    let at = |t: u64| &curve[t as usize];
    assert!(at(0).support > 0 && at(0).support < at(1).support);
    for t in 2..=8 {
        assert_eq!(at(t).support, 10_000);
        assert!((at(t).expected_layer.unwrap() - 2.0).abs() < 1e-9, "{:?}", at(t));
    }
    // tail lengths run 9..=11
    assert!(at(9).support > 10_000 && at(10).support < 20_000);
    for t in 11..=12 {
        assert_eq!(at(t).support, 20_000);
        assert!((at(t).expected_layer.unwrap() - 5.0).abs() < 0.05, "{:?}", at(t));
    }
    assert!(curve.iter().all(|p| p.flag == EstimateFlag::Ok));
}

#[test]
fn nde_matches_hand_computed_value() {
    let bins = [Bin::closed(0, 2), Bin::closed(3, 5)];
    let l1: BinLayers = bins.into_iter().zip([2.0, 6.0]).collect();
    let l2: BinLayers = bins.into_iter().zip([3.0, 5.0]).collect();
    let dist = ContextDistribution::new(bins.into_iter().zip([0.25, 0.75]).collect()).unwrap();
    let r = nde_from_layers(&tid("a"), &l1, &tid("b"), &l2, &dist, MissingBinPolicy::Strict).unwrap();
    assert_eq!(r.value, -0.5);
    assert_eq!(r.per_bin_contributions[&bins[0]], 0.25);
    assert_eq!(r.per_bin_contributions[&bins[1]], -0.75);
}

#[test]
fn nde_on_synthetic_records() {
    let s = spec(vec![
        task("a", 8000, &[("0-2", 0.25, 2), ("3-5", 0.75, 6)]),
        task("b", 8000, &[("0-2", 0.5, 3), ("3-5", 0.5, 5)]),
    ]);
    let rs = generate(&s).unwrap();
    let settings = AnalysisSettings::default();
    let r = nde(&rs, &tid("a"), &tid("b"), &s.binning, &settings, None).unwrap();
    assert!((r.value + 0.5).abs() < 0.05, "{}", r.value);
    assert!(r.skipped_bins.is_empty());

    let natural_a = natural_expected_layer(&rs, &tid("a"), &s.binning, &settings).unwrap();
    assert!((natural_a - 5.0).abs() < 0.05);
    let pooled = unmediated_difference(&rs, &tid("a"), &tid("b"), &s.binning, &settings).unwrap();
    let weighted = unmediated_difference(
        &rs,
        &tid("a"),
        &tid("b"),
        &s.binning,
        &AnalysisSettings {
            unmediated: UnmediatedMode::BinWeighted,
            ..settings.clone()
        },
    )
    .unwrap();
    // equal gains in every bin make both definitions agree
    assert!((pooled + 1.0).abs() < 0.05, "{pooled}");
    assert!((pooled - weighted).abs() < 0.02, "{pooled} vs {weighted}");
}

#[test]
fn missing_bins_are_strict_by_default() {
    let s = spec(vec![
        task("a", 4000, &[("0-2", 0.5, 2), ("6-8", 0.5, 6)]),
        task("b", 4000, &[("0-2", 1.0, 4)]),
    ]);
    let rs = generate(&s).unwrap();
    let settings = AnalysisSettings::default();
    let err = nde(&rs, &tid("a"), &tid("b"), &s.binning, &settings, None).unwrap_err();
    assert!(matches!(err, Error::MissingBin { .. }), "{err:?}");

    let renorm = AnalysisSettings {
        missing_bins: MissingBinPolicy::Renormalize,
        ..settings
    };
    let r = nde(&rs, &tid("a"), &tid("b"), &s.binning, &renorm, None).unwrap();
    assert_eq!(r.skipped_bins, vec![Bin::closed(6, 8)]);
    assert!((r.value - 2.0).abs() < 0.05);
}

#[test]
fn synthetic_records_survive_a_file_round_trip() {
    let s = spec(vec![task(
        "dep",
        500,
        &[("0-2", 0.2, 1), ("3-5", 0.3, 4), ("9+", 0.5, 10)],
    )]);
    let rs = generate(&s).unwrap();
    let mut buf = Vec::new();
    serialize(&rs, &mut buf).unwrap();
    let back = ingest(Cursor::new(&buf), Some(12)).unwrap();
    assert_eq!(back, rs);
    assert!(matches!(
        ingest(Cursor::new(&buf), Some(6)),
        Err(Error::LayerCountMismatch { .. })
    ));

    let dist = empirical_distribution(&back, &tid("dep"), &s.binning).unwrap();
    let expected: BTreeMap<Bin, f64> = [("0-2", 0.2), ("3-5", 0.3), ("6-8", 0.0), ("9+", 0.5)]
        .into_iter()
        .map(|(l, w)| (Bin::parse(l).unwrap(), w))
        .collect();
    assert_eq!(dist.weights(), &expected);
}
