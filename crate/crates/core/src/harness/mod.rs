//! Experiment sweeps, persistence and reports.

mod config;
mod convergence;
mod report;
mod runner;
mod store;

pub use config::{
    ConvergenceConfig, DatasetSource, DatasetSpec, ExperimentConfig, Rounds, RoundsKeyword,
};
pub use convergence::{detect_convergence, detect_convergence_with, DeviationStatistic};
pub use report::{
    delta_observations, emit_report, format_sig3, timing_by_cost, timing_grand_mean, ReportKind,
};
pub use runner::{run_experiment, RunOptions};
pub use store::{
    read_trace, store_files, write_trace, CellKey, Failure, Fingerprint, Metadata, RunStore,
    METADATA_FILE, RECORDS_FILE, TIMINGS_FILE, TRACES_DIR,
};
