//! Training, displacement metrics, multi-seed runs and reports.

mod features;
mod metrics;
mod report;
mod train;

pub use features::{
    decode_outputs, window_features, window_targets, Batch, PreparedWindow, POSITION_SCALE,
    VELOCITY_SCALE,
};
pub use metrics::{
    displacement_metrics, evaluate_displacement, Metrics, Predictor, Trajectory, EVAL_BATCH,
};
pub use report::{
    ablation_grid, ablation_suite, emit_report, mean_std, run_labels, run_multi_seed,
    AblationEntry, Aggregate, RunReport, RunRow, ALL_CONNECTIONS_SEEDS,
};
pub use train::{train, EpochRecord, TrainConfig, TrainOutcome};
