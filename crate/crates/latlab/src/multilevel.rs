//! Multilevel scheduling: rewrite an N-task array into fewer, longer
//! launches so the scheduler pays its per-launch overhead once per bundle
//! instead of once per task.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArrayId, JobArray, ParameterSet, RunMode, TaskSpec, TrialResult};
use crate::policy::PolicyConfig;
use crate::time::Micros;

/// How many source tasks go into one launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BundleFactor {
    /// `b = n`: one launch per processor.
    PerProcessor(PerProcessorTag),
    Fixed(u32),
}

/// Serde helper so `"n"` is the only accepted string form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerProcessorTag {
    #[serde(rename = "n")]
    N,
}

impl BundleFactor {
    pub const PER_PROCESSOR: BundleFactor = BundleFactor::PerProcessor(PerProcessorTag::N);

    pub fn resolve(self, tasks_per_processor: u32) -> u32 {
        match self {
            BundleFactor::PerProcessor(_) => tasks_per_processor,
            BundleFactor::Fixed(b) => b,
        }
    }
}

impl Default for BundleFactor {
    fn default() -> Self {
        BundleFactor::PER_PROCESSOR
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultilevelError {
    #[error("bundle factor must be at least 1")]
    ZeroBundleFactor,
    #[error("{0} is a gang job (slots_per_task > 1); bundling applies to pleasantly parallel arrays only")]
    GangJob(ArrayId),
}

/// Derived shape of a bundled array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundlePlan {
    pub source: ArrayId,
    pub bundle_factor: u32,
    pub bundled_task_count: u32,
    pub intra_bundle_overhead: Micros,
}

/// Rewrites `array` into `ceil(N/b)` bundles. Bundle `i` carries the
/// payloads of source tasks `[i*b, min((i+1)*b, N))`; its duration is the
/// payload sum plus `(payload_count - 1) * eps` for switching datasets
/// inside one launch. Payload bookkeeping survives for the conservation
/// audit.
pub fn bundle(array: &JobArray, b: u32, eps: Micros) -> Result<JobArray, MultilevelError> {
    if b == 0 {
        return Err(MultilevelError::ZeroBundleFactor);
    }
    if array.slots_per_task > 1 {
        return Err(MultilevelError::GangJob(array.id));
    }
    if b == 1 {
        return Ok(array.clone());
    }
    let tasks: Vec<TaskSpec> = array
        .tasks
        .chunks(b as usize)
        .map(|chunk| {
            let payload: Micros = chunk.iter().map(|t| t.payload).sum();
            let units: u32 = chunk.iter().map(|t| t.payload_units).sum();
            TaskSpec {
                duration: payload + eps * (units as u64 - 1),
                payload,
                payload_units: units,
            }
        })
        .collect();
    Ok(JobArray { tasks, ..array.clone() })
}

pub fn plan(array: &JobArray, b: u32, eps: Micros) -> Result<BundlePlan, MultilevelError> {
    let bundled = bundle(array, b, eps)?;
    Ok(BundlePlan {
        source: array.id,
        bundle_factor: b,
        bundled_task_count: bundled.task_count(),
        intra_bundle_overhead: eps,
    })
}

/// Runs the bundled form of the benchmark workload through the identical
/// policy and engine. Utilization is computed against the original
/// `T_job = n * t`: bundling overhead counts against utilization, never
/// toward it.
pub fn multilevel_run(
    policy_name: &str,
    policy: &PolicyConfig,
    params: &ParameterSet,
    bundle_factor: BundleFactor,
    eps: Micros,
    seed: u64,
) -> Result<TrialResult, crate::bench::TrialError> {
    let spec = crate::bench::TrialSpec {
        policy_name: policy_name.to_string(),
        policy: policy.clone(),
        params: params.clone(),
        mode: RunMode::Multilevel,
        bundle_factor,
        intra_bundle_overhead: eps,
        preferred_slots_per_node: crate::bench::DEFAULT_SLOTS_PER_NODE,
    };
    Ok(crate::bench::run_trial(&spec, seed, &Default::default())?.result)
}
