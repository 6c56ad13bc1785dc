//! Experiment orchestration: seeded parallel trials, summary tables,
//! lower-bound comparisons, persistence and the command line.

mod cli;
mod config;
mod persist;
mod report;
mod trials;

pub use cli::cli_dispatch;
pub use config::{ExperimentConfig, InstanceSource, DEFAULT_MAX_PULLS};
pub use persist::{load, persist, read_records, write_records, SCHEMA_VERSION};
pub use report::{
    bound_comparison_report, table1_report, tables_to_csv, BoundCheck, BoundComparison, SummaryRow,
    SummaryTable, CSV_HEADER, TABLE1_ALGOS,
};
pub use trials::{run_trial, run_trials, run_trials_with};
