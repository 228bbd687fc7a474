//! Shared domain types and the benchmark arithmetic.

mod cluster;
mod latency;
mod params;
mod trial;
mod workload;

pub use cluster::{ClusterSpec, NodeId};
pub use latency::{LatencyProfile, Stage, StageLatency};
pub use params::{derive_parameter_set, utilization, ParameterSet};
pub use trial::{RunMode, StageTotals, TrialResult};
pub use workload::{
    validate_workload, ArrayId, JobArray, TaskRef, TaskSpec, TaskState, WorkloadIssue,
};

use crate::time::Micros;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("task time {task_time} does not divide job time {job_time}")]
    NonDivisibleJobTime { job_time: Micros, task_time: Micros },
    #[error("{what} must be positive")]
    NonPositive { what: &'static str },
    #[error(
        "total time {t_total} is below the zero-overhead bound {t_job}: \
         the simulation finished faster than physically possible (accounting bug)"
    )]
    TotalBelowBound { t_job: Micros, t_total: Micros },
    #[error("latency profile invalid: {0}")]
    BadLatencyProfile(String),
}
