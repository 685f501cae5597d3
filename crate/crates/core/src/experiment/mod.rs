//! Data ingestion, synthetic data, the semi-supervised training protocol and
//! its diagnostics.

pub mod dataset;
pub mod runs;
pub mod stats;
pub mod synth;
pub mod train;

pub use dataset::{
    encode_features, inverse_log_transform, load_dataset, log_transform, predicted_counts,
    row_normalize, Dataset, LoadOptions, TypeMap, DEFAULT_TYPES,
};
pub use runs::{multi_run, MultiRun, RunEnvelope};
pub use stats::{distribution_stats, DistributionStats, Histogram};
pub use synth::{synth_generate, GroundTruth, SynthSpec};
pub use train::{
    evaluate, metrics_from_counts, predict, split, train, Metrics, Split, TrainConfig,
    TrainHistory, TrainOutcome,
};
