//! Context-length mediation analysis for layer-wise probing results.
//!
//! Given per-example outcomes of cumulative probes `P(0)..P(L)`, this crate
//! computes expected layers overall, per context-length bin and per length
//! threshold; natural direct effects between tasks under an imposed
//! context-length distribution; the expected-layer interval each task can
//! reach under any distribution; every task ranking those intervals allow;
//! and Simpson's-paradox witnesses. [`synth`] generates record sets with
//! planted profiles for testing all of the above.

pub mod binning;
pub mod distribution;
pub mod error;
pub mod mediation;
pub mod metrics;
pub mod record;
pub mod settings;
pub mod synth;

pub use binning::{Bin, BinSpec, ContextDistribution};
pub use error::{Error, Result};
pub use metrics::{BinLayers, BinTable, DeltaVector, ExpectedLayer, LayerScoreProfile, ScoreAggregator};
pub use record::{LayerOutcome, OutcomeVariant, ProbeRecord, RecordSet, Span, TaskId};
pub use settings::AnalysisSettings;
