//! Validation strategies, metrics and report assembly.

pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod split;

pub use metrics::{compute_metrics, ConfusionCounts, Metrics};
pub use pipeline::{
    fit_split, run_grid, run_pipeline, run_pipeline_with, sweep_channels, EvaluationReport, FeatureBank, FeatureOrder,
    FittedSplit, GridSpec, PipelineConfig, ReportRow, SplitResult, SweepRow,
};
pub use split::{
    plan_splits, split_chrono_7030, split_kfold, split_random_7030_repeated, Partition, SplitPlan, SplitStrategy,
    SplitUnit,
};
