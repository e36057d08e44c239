//! Experiment harness: configuration, training runs, sweeps and charts.

pub mod config;
pub mod report;
pub mod sweep;
pub mod synthetic;
pub mod train;

pub use config::TrainConfig;
pub use report::{charts, write_charts, ChartKind, RenderedChart};
pub use sweep::{read_summary, run_sweep, write_summary, SummaryRow, SweepAxis, SweepOutcome};
pub use train::{
    config_for_checkpoint, evaluate_samples, evaluation_report, load_for_checkpoint, predict,
    prepare, prepare_corpus, test_partition, train, train_prepared, write_outputs, EvalReport,
    RunMetadata, SweepPoint, TrainOutcome, CHECKPOINT_FILE, REPORT_FILE, RESOLVED_CONFIG_FILE,
};
