//! Experiment harness: trials, plans, analytic cross-checks, reports.

mod experiment;
mod oracle;
mod report;
mod trial;

pub use experiment::{
    run_experiment, trial_seed, CellReport, ExperimentPlan, ExperimentReport, CALIBRATION_NOTE,
};
pub use oracle::serialized_dispatch_makespan;
pub use report::{csv_string, plan_table, summary_table, write_csv, write_json, CSV_HEADER};
pub use trial::{run_trial, TrialError, TrialOptions, TrialRun, TrialSpec, DEFAULT_SLOTS_PER_NODE};
