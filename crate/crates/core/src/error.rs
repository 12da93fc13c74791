use thiserror::Error;

use crate::binning::Bin;
use crate::record::TaskId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("record stream has no header line and no layer count was supplied")]
    MissingHeader,

    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    SchemaVersion { found: String, expected: String },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("record set invalid: {0}")]
    Invalid(String),

    #[error("inconsistent layer count: {found} vs {expected}")]
    LayerCountMismatch { found: usize, expected: usize },

    #[error("unknown task {0}")]
    UnknownTask(TaskId),

    #[error("task {0} has no records")]
    EmptyTask(TaskId),

    #[error("invalid bin spec: {0}")]
    BinSpec(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("cannot score an empty record subset")]
    EmptySubset,

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("aggregator {aggregator} cannot score {variant} outcomes")]
    VariantMismatch {
        aggregator: &'static str,
        variant: &'static str,
    },

    #[error("expected layer undefined: total gain {total:e} is within tolerance of zero")]
    UndefinedExpectedLayer { total: f64 },

    #[error("bin {bin} carries weight {weight} but is undefined for task {task}")]
    MissingBin { task: TaskId, bin: Bin, weight: f64 },

    #[error("every weighted bin was skipped")]
    AllBinsSkipped,

    #[error("no defined bins for task {0}")]
    NoDefinedBins(TaskId),

    #[error("tasks {0} and {1} share no defined bins")]
    NoSharedBins(TaskId, TaskId),

    #[error("{count} tasks exceeds the ranking enumeration cap of {cap}")]
    TooManyTasks { count: usize, cap: usize },

    #[error("target {target} lies outside the attainable interval [{low}, {high}]")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),
}
