//! Training orchestration, evaluation metrics, and the experiment sweeps.

mod config;
mod experiments;
mod metrics;
mod train;

pub use config::TrainConfig;
pub use experiments::{run_experiment_suite, run_sweep, write_experiment_csv, ExperimentRow, Suite};
pub use metrics::{evaluate_metrics, write_report_csv, MetricsReport};
pub use train::{train, train_with, write_log_csv, LogRow, ProjectionEvent, RefreshEvent, TrainLog, TrainOutput};
