//! Training loop, chronological splitting and evaluation metrics.

pub mod adam;
pub mod comparison;
pub mod metrics;
pub mod split;
pub mod trainer;

pub use adam::Adam;
pub use comparison::{
    comparison_csv, comparison_table, run_comparison, sort_rows, ComparisonEntry, ComparisonRow,
    REFERENCE_RESULTS,
};
pub use metrics::{compute_metrics, evaluate_model, MetricsReport, DAYTIME_HOURS};
pub use split::{chronological_split, SplitRatios};
pub use trainer::{fit_model, prepare, EpochStats, PreparedData, TrainConfig, TrainOutcome};
