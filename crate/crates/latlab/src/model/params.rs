//! Parameter-set derivation and the utilization formula.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::time::Micros;

/// One column of the benchmark plan: `P` processors each execute `n` tasks
/// of `t` seconds, so the isolated per-processor work is `T_job = n * t`
/// and the whole run comprises `N = P * n` tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub processors: u32,
    pub job_time_per_processor: Micros,
    pub task_time: Micros,
    pub tasks_per_processor: u32,
    pub total_tasks: u64,
    pub trials: u32,
}

impl ParameterSet {
    /// `N * t = P * T_job`, the invariant work volume of the plan.
    pub fn total_processor_time(&self) -> Micros {
        self.task_time * self.total_tasks
    }

    /// Same set with the processor count rescaled; `n` and `t` are
    /// preserved, so `N` rescales as `P * n`.
    pub fn with_processors(&self, processors: u32) -> ParameterSet {
        ParameterSet {
            processors,
            total_tasks: processors as u64 * self.tasks_per_processor as u64,
            ..self.clone()
        }
    }
}

/// Derives `n = T_job / t` and `N = P * n` from the free parameters.
///
/// `T_job` must be an exact multiple of `t`; anything else would silently
/// change the work volume.
pub fn derive_parameter_set(
    processors: u32,
    job_time_per_processor: Micros,
    task_time: Micros,
    trials: u32,
) -> Result<ParameterSet, ModelError> {
    if processors == 0 {
        return Err(ModelError::NonPositive { what: "processors" });
    }
    if task_time.is_zero() {
        return Err(ModelError::NonPositive { what: "task time" });
    }
    if job_time_per_processor.is_zero() {
        return Err(ModelError::NonPositive { what: "job time per processor" });
    }
    if trials == 0 {
        return Err(ModelError::NonPositive { what: "trials" });
    }
    if !job_time_per_processor.0.is_multiple_of(task_time.0) {
        return Err(ModelError::NonDivisibleJobTime {
            job_time: job_time_per_processor,
            task_time,
        });
    }
    let tasks_per_processor = (job_time_per_processor.0 / task_time.0) as u32;
    Ok(ParameterSet {
        processors,
        job_time_per_processor,
        task_time,
        tasks_per_processor,
        total_tasks: processors as u64 * tasks_per_processor as u64,
        trials,
    })
}

/// `U = T_job / T_total`.
///
/// `T_total < T_job` means the run beat the zero-overhead bound, which is
/// impossible; that is an accounting bug and must abort the trial rather
/// than clamp.
pub fn utilization(t_job: Micros, t_total: Micros) -> Result<f64, ModelError> {
    if t_job.is_zero() {
        return Err(ModelError::NonPositive { what: "T_job" });
    }
    if t_total < t_job {
        return Err(ModelError::TotalBelowBound { t_job, t_total });
    }
    Ok(t_job.0 as f64 / t_total.0 as f64)
}
