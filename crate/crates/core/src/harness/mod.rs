//! Experiment harness: configuration, schedules, execution and output.

pub mod config;
pub mod csv_io;
pub mod experiment;
pub mod schedule;
pub mod summary;

pub use config::{EstimatorChoice, ExperimentConfig, PolicyKind, PolicyParams, PolicySpec};
pub use csv_io::{read_records, write_curves, write_records, write_records_to, RECORD_HEADER};
pub use experiment::{build_policy, run_experiment, run_instance, CellFailure, ExperimentOutcome, RunRecord};
pub use schedule::{default_hyperparams, maxinp_defaults, sup_colstim_theory_c1, HyperMode};
pub use summary::{summarize, PolicyTotals, Summary};
