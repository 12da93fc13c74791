//! Synthetic record sets generated from planted per-bin score profiles.
//!
//! Each task has a categorical distribution over bins and, per bin, a planted
//! profile `score(l)` for `l = 0..=L`. Generated outcomes are Bernoulli draws
//! with those probabilities, so every downstream metric has an exact oracle
//! computed from the profiles directly.
//!
//! Randomness is counter-based: the stream for one example is keyed on
//! `(seed, task name, example index)` and layer `l` reads its own block of
//! that stream, so output does not depend on generation order or thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{Bin, BinSpec, ContextDistribution};
use crate::error::{Error, Result};
use crate::metrics::{expected_layer, LayerScoreProfile};
use crate::record::{LayerOutcome, OutcomeVariant, ProbeRecord, RecordSet, Span, TaskId};

const MAX_SPAN_OFFSET: u64 = 32;
// u32 words per ChaCha block
const BLOCK_WORDS: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeMode {
    /// Each layer's outcome is an independent draw.
    #[default]
    Independent,
    /// One latent draw per example; outcomes are monotone in `l`.
    Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allocation {
    /// Each example's bin is drawn from the task distribution.
    #[default]
    Sampled,
    /// Bin counts follow the distribution exactly (largest remainder).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedBin {
    pub weight: f64,
    /// `score(l)` for `l = 0..=L`, nondecreasing, in `[0, 1]`.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskScenario {
    pub name: TaskId,
    pub samples: usize,
    #[serde(default)]
    pub two_spans: bool,
    pub bins: BTreeMap<Bin, PlantedBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub layers: usize,
    pub binning: BinSpec,
    /// Tail-bin lengths are drawn from `tail_start .. tail_start + tail_extent`; defaults to the bin width.
    #[serde(default)]
    pub tail_extent: Option<u64>,
    #[serde(default)]
    pub mode: OutcomeMode,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default)]
    pub seed: u64,
    pub tasks: Vec<TaskScenario>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.layers == 0 {
            return bad("layers must be positive".into());
        }
        if self.tail_extent == Some(0) {
            return bad("tail_extent must be positive".into());
        }
        if self.tasks.is_empty() {
            return bad("no tasks".into());
        }
        let valid_bins = self.binning.bins();
        let mut names = std::collections::BTreeSet::new();
        for task in &self.tasks {
            let name = &task.name;
            if !names.insert(name) {
                return bad(format!("duplicate task {name}"));
            }
            if task.samples == 0 {
                return bad(format!("task {name}: sample count must be at least 1"));
            }
            if task.bins.is_empty() {
                return bad(format!("task {name}: no bins"));
            }
            for (bin, planted) in &task.bins {
                if !valid_bins.contains(bin) {
                    return bad(format!("task {name}: bin {bin} is not produced by the bin spec"));
                }
                if planted.profile.len() != self.layers + 1 {
                    return bad(format!(
                        "task {name}, bin {bin}: profile has {} entries, expected {}",
                        planted.profile.len(),
                        self.layers + 1
                    ));
                }
                LayerScoreProfile::new(planted.profile.clone())
                    .map_err(|e| Error::Scenario(format!("task {name}, bin {bin}: {e}")))?;
                if planted.profile.windows(2).any(|w| w[1] < w[0]) {
                    return bad(format!("task {name}, bin {bin}: profile decreases"));
                }
            }
            self.distribution(task)
                .map_err(|e| Error::Scenario(format!("task {name}: {e}")))?;
        }
        Ok(())
    }

    pub fn task(&self, name: &TaskId) -> Result<&TaskScenario> {
        self.tasks
            .iter()
            .find(|t| &t.name == name)
            .ok_or_else(|| Error::UnknownTask(name.clone()))
    }

    /// The planted context distribution of `task`.
    pub fn distribution(&self, task: &TaskScenario) -> Result<ContextDistribution> {
        ContextDistribution::new(task.bins.iter().map(|(b, p)| (*b, p.weight)).collect())
    }

    fn bin_lengths(&self, bin: &Bin) -> (u64, u64) {
        match bin.high {
            Some(h) => (bin.low, h),
            None => {
                let extent = self.tail_extent.unwrap_or(self.binning.width());
                (bin.low, bin.low + extent - 1)
            }
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn example_rng(seed: u64, task: &TaskId, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(task.as_str().as_bytes()).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index as u64);
    rng
}

/// Largest-remainder apportionment of `total` over `weights`.
fn exact_counts(weights: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn generate_example(
    spec: &ScenarioSpec,
    task: &TaskScenario,
    bins: &[(Bin, &PlantedBin)],
    fixed_bin: Option<usize>,
    index: usize,
) -> ProbeRecord {
    let mut rng = example_rng(spec.seed, &task.name, index);
    let which = fixed_bin.unwrap_or_else(|| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        bins.iter()
            .position(|(_, p)| {
                acc += p.weight;
                u < acc
            })
            .unwrap_or_else(|| bins.iter().rposition(|(_, p)| p.weight > 0.0).unwrap_or(0))
    });
    let (bin, planted) = bins[which];
    let (lo, hi) = spec.bin_lengths(&bin);
    let c = rng.random_range(lo..=hi);
    let start = rng.random_range(0..MAX_SPAN_OFFSET);
    let (span1, span2) = if task.two_spans {
        let a = rng.random_range(0..=c);
        let b = rng.random_range(0..=c);
        let s1 = Span::new(start, start + a);
        let s2 = Span::new(start + b, start + c);
        if rng.random::<bool>() {
            (s2, Some(s1))
        } else {
            (s1, Some(s2))
        }
    } else {
        (Span::new(start, start + c), None)
    };
    let latent: f64 = rng.random();
    let outcomes = planted
        .profile
        .iter()
        .enumerate()
        .map(|(l, &p)| {
            let u = match spec.mode {
                OutcomeMode::Monotone => latent,
                OutcomeMode::Independent => {
                    rng.set_word_pos(BLOCK_WORDS * (l as u128 + 1));
                    rng.random()
                }
            };
            LayerOutcome::Correct(u < p)
        })
        .collect();
    ProbeRecord {
        task: task.name.clone(),
        example_id: format!("{}-{index:07}", task.name),
        span1,
        span2,
        outcomes,
    }
}

/// Generates the record set for `spec`; identical specs give identical output.
pub fn generate(spec: &ScenarioSpec) -> Result<RecordSet> {
    spec.validate()?;
    let mut records = Vec::new();
    for task in &spec.tasks {
        let bins: Vec<(Bin, &PlantedBin)> = task.bins.iter().map(|(b, p)| (*b, p)).collect();
        let bin_of: Option<Vec<usize>> = match spec.allocation {
            Allocation::Sampled => None,
            Allocation::Exact => {
                let weights: Vec<f64> = bins.iter().map(|(_, p)| p.weight).collect();
                let counts = exact_counts(&weights, task.samples);
                Some(
                    counts
                        .iter()
                        .enumerate()
                        .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
                        .collect(),
                )
            }
        };
        let generated: Vec<ProbeRecord> = (0..task.samples)
            .into_par_iter()
            .map(|i| generate_example(spec, task, &bins, bin_of.as_ref().map(|b| b[i]), i))
            .collect();
        records.extend(generated);
    }
    let variants = spec
        .tasks
        .iter()
        .map(|t| (t.name.clone(), OutcomeVariant::Binary))
        .collect();
    RecordSet::new(spec.layers, variants, records)
}

/// Same as [`generate`] with `seed` replacing the scenario's seed.
pub fn generate_with_seed(spec: &ScenarioSpec, seed: u64) -> Result<RecordSet> {
    let mut spec = spec.clone();
    spec.seed = seed;
    generate(&spec)
}

fn profile_expected_layer(profile: &[f64]) -> Result<f64> {
    expected_layer(&LayerScoreProfile::new(profile.to_vec())?.delta())
}

/// Exact expected layer of the planted profile of `task` in `bin`.
pub fn planted_expected_layer(spec: &ScenarioSpec, task: &TaskId, bin: &Bin) -> Result<f64> {
    let planted = spec
        .task(task)?
        .bins
        .get(bin)
        .ok_or_else(|| Error::Scenario(format!("task {task} has no planted bin {bin}")))?;
    profile_expected_layer(&planted.profile)
}

/// Exact expected layer of the distribution-weighted pooled profile of `task`.
pub fn planted_pooled_expected_layer(spec: &ScenarioSpec, task: &TaskId) -> Result<f64> {
    let t = spec.task(task)?;
    let mut pooled = vec![0.0; spec.layers + 1];
    for p in t.bins.values() {
        for (acc, s) in pooled.iter_mut().zip(&p.profile) {
            *acc += p.weight * s;
        }
    }
    for s in &mut pooled {
        *s = s.clamp(0.0, 1.0);
    }
    profile_expected_layer(&pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBinOracle {
    pub task: TaskId,
    pub bin: Bin,
    pub weight: f64,
    pub deltas: Vec<f64>,
    pub expected_layer: Option<f64>,
}

/// Exact per-bin oracle values for every planted bin, in scenario order.
pub fn planted_oracle(spec: &ScenarioSpec) -> Result<Vec<PlantedBinOracle>> {
    spec.validate()?;
    let mut out = Vec::new();
    for task in &spec.tasks {
        for (bin, p) in &task.bins {
            let profile = LayerScoreProfile::new(p.profile.clone())?;
            out.push(PlantedBinOracle {
                task: task.name.clone(),
                bin: *bin,
                weight: p.weight,
                deltas: profile.delta().values().to_vec(),
                expected_layer: expected_layer(&profile.delta()).ok(),
            });
        }
    }
    Ok(out)
}

/// A profile rising from `floor` to `ceiling` with the whole gain at layer `step`.
pub fn step_profile(layers: usize, step: usize, floor: f64, ceiling: f64) -> Vec<f64> {
    (0..=layers).map(|l| if l >= step { ceiling } else { floor }).collect()
}

/// A profile from `floor` to `ceiling` whose expected layer is exactly `target`
/// (up to rounding), splitting the gain between the two layers adjacent to it.
pub fn profile_with_expected_layer(layers: usize, target: f64, floor: f64, ceiling: f64) -> Result<Vec<f64>> {
    if !(1.0..=layers as f64).contains(&target) {
        return Err(Error::Scenario(format!("target {target} outside [1, {layers}]")));
    }
    let lo = target.floor() as usize;
    let frac = target - lo as f64;
    let gain = ceiling - floor;
    Ok((0..=layers)
        .map(|l| {
            if l < lo {
                floor
            } else if l == lo {
                floor + gain * (1.0 - frac)
            } else {
                ceiling
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{expected_layer_by_bin, task_expected_layer, ScoreAggregator};

    fn scenario(profile: Vec<f64>, samples: usize) -> ScenarioSpec {
        let layers = profile.len() - 1;
        ScenarioSpec {
            layers,
            binning: BinSpec::new(3, 9).unwrap(),
            tail_extent: None,
            mode: OutcomeMode::Independent,
            allocation: Allocation::Sampled,
            seed: 7,
            tasks: vec![TaskScenario {
                name: TaskId::new("a").unwrap(),
                samples,
                two_spans: true,
                bins: BTreeMap::from([
                    (
                        Bin::closed(0, 2),
                        PlantedBin {
                            weight: 0.5,
                            profile: profile.clone(),
                        },
                    ),
                    (Bin::tail(9), PlantedBin { weight: 0.5, profile }),
                ]),
            }],
        }
    }

    #[test]
    fn all_correct_when_score_is_one() {
        let rs = generate(&scenario(vec![1.0; 5], 200)).unwrap();
        assert!(rs
            .records()
            .iter()
            .all(|r| r.outcomes.iter().all(|o| *o == LayerOutcome::Correct(true))));
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = scenario(vec![0.0, 1.0], 0);
        assert!(generate(&s).is_err());
        s.tasks[0].samples = 10;
        s.tasks[0].bins.get_mut(&Bin::tail(9)).unwrap().profile = vec![1.0, 0.5];
        assert!(matches!(generate(&s), Err(Error::Scenario(m)) if m.contains("decreases")));
        let mut s = scenario(vec![0.0, 1.0], 10);
        s.tasks[0].bins.insert(
            Bin::closed(1, 3),
            PlantedBin {
                weight: 0.0,
                profile: vec![0.0, 1.0],
            },
        );
        assert!(generate(&s).is_err());
        let mut s = scenario(vec![0.0, 1.0], 10);
        s.tasks[0].bins.get_mut(&Bin::tail(9)).unwrap().weight = 0.6;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn lengths_stay_in_planted_bins() {
        let spec = scenario(vec![0.0, 0.5, 1.0], 500);
        let rs = generate(&spec).unwrap();
        for r in rs.records() {
            let c = r.context_length();
            assert!(c <= 2 || (9..=11).contains(&c), "{c}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = scenario(vec![0.1, 0.4, 0.9], 300);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate_with_seed(&spec, 8).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(pool.install(|| generate(&spec).unwrap()), generate(&spec).unwrap());
    }

    #[test]
    fn exact_allocation_counts() {
        assert_eq!(exact_counts(&[0.5, 0.25, 0.25], 10), [5, 3, 2]);
        assert_eq!(exact_counts(&[1.0 / 3.0; 3], 10).iter().sum::<usize>(), 10);
        let mut spec = scenario(vec![0.0, 1.0], 101);
        spec.allocation = Allocation::Exact;
        let rs = generate(&spec).unwrap();
        let short = rs.records().iter().filter(|r| r.context_length() <= 2).count();
        assert_eq!(short, 51);
    }

    #[test]
    fn planted_values() {
        let t = TaskId::new("a").unwrap();
        let step = scenario(step_profile(12, 5, 0.0, 1.0), 1);
        assert_eq!(planted_expected_layer(&step, &t, &Bin::tail(9)).unwrap(), 5.0);
        let ramp: Vec<f64> = (0..=12).map(|l| l as f64 / 12.0).collect();
        let v = planted_expected_layer(&scenario(ramp, 1), &t, &Bin::tail(9)).unwrap();
        assert!((v - 6.5).abs() < 1e-12);
        let two: Vec<f64> = (0..=12)
            .map(|l| {
                if l >= 9 {
                    1.0
                } else if l >= 3 {
                    0.5
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(
            planted_expected_layer(&scenario(two, 1), &t, &Bin::tail(9)).unwrap(),
            6.0
        );
        assert!(planted_expected_layer(&scenario(vec![0.3; 13], 1), &t, &Bin::tail(9)).is_err());

        for target in [1.0, 2.25, 6.5, 11.9, 12.0] {
            let p = profile_with_expected_layer(12, target, 0.1, 0.9).unwrap();
            assert!((profile_expected_layer(&p).unwrap() - target).abs() < 1e-12, "{target}");
        }
    }

    #[test]
    fn step_profile_recovered() {
        let spec = scenario(step_profile(12, 5, 0.0, 1.0), 20_000);
        let rs = generate(&spec).unwrap();
        let t = TaskId::new("a").unwrap();
        let e = task_expected_layer(&rs, &t, ScoreAggregator::MeanOutcome, false).unwrap();
        assert!((e.value - 5.0).abs() <= 0.1, "{}", e.value);
    }

    #[test]
    fn monotone_mode_outcomes_are_monotone() {
        let mut spec = scenario((0..=6).map(|l| l as f64 / 6.0).collect(), 2000);
        spec.mode = OutcomeMode::Monotone;
        let rs = generate(&spec).unwrap();
        for r in rs.records() {
            let flags: Vec<bool> = r.outcomes.iter().map(|o| *o == LayerOutcome::Correct(true)).collect();
            assert!(flags.windows(2).all(|w| !w[0] || w[1]));
        }
        let t = TaskId::new("a").unwrap();
        let table = expected_layer_by_bin(&rs, &t, ScoreAggregator::MeanOutcome, &spec.binning, false, 30).unwrap();
        let e = table.get(&Bin::tail(9)).unwrap().expected_layer.unwrap();
        assert!((e - 3.5).abs() < 0.2, "{e}");
    }
}
