//! The seven latency stages of the scheduler pipeline.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::time::Micros;

/// Every unit of scheduler overhead is attributed to one of these stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Submission,
    QueueManagement,
    ResourceIdentification,
    ResourceSelection,
    ResourceAllocation,
    JobDispatch,
    JobTermination,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Submission,
        Stage::QueueManagement,
        Stage::ResourceIdentification,
        Stage::ResourceSelection,
        Stage::ResourceAllocation,
        Stage::JobDispatch,
        Stage::JobTermination,
    ];

    pub fn index(self) -> usize {
        match self {
            Stage::Submission => 0,
            Stage::QueueManagement => 1,
            Stage::ResourceIdentification => 2,
            Stage::ResourceSelection => 3,
            Stage::ResourceAllocation => 4,
            Stage::JobDispatch => 5,
            Stage::JobTermination => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Submission => "submission",
            Stage::QueueManagement => "queue_management",
            Stage::ResourceIdentification => "resource_identification",
            Stage::ResourceSelection => "resource_selection",
            Stage::ResourceAllocation => "resource_allocation",
            Stage::JobDispatch => "job_dispatch",
            Stage::JobTermination => "job_termination",
        }
    }
}

/// One stage's duration distribution: uniform on
/// `[base - jitter, base + jitter]`, clamped at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageLatency {
    pub base: Micros,
    pub jitter: Micros,
}

impl StageLatency {
    pub const ZERO: StageLatency = StageLatency {
        base: Micros::ZERO,
        jitter: Micros::ZERO,
    };

    pub const fn fixed(base: Micros) -> StageLatency {
        StageLatency {
            base,
            jitter: Micros::ZERO,
        }
    }

    pub const fn new(base: Micros, jitter: Micros) -> StageLatency {
        StageLatency { base, jitter }
    }
}

/// Per-stage overhead distributions for one scheduler configuration.
/// Omitted stages deserialize as zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyProfile {
    pub submission: StageLatency,
    pub queue_management: StageLatency,
    pub resource_identification: StageLatency,
    pub resource_selection: StageLatency,
    pub resource_allocation: StageLatency,
    pub job_dispatch: StageLatency,
    pub job_termination: StageLatency,
}

impl LatencyProfile {
    pub const ZERO: LatencyProfile = LatencyProfile {
        submission: StageLatency::ZERO,
        queue_management: StageLatency::ZERO,
        resource_identification: StageLatency::ZERO,
        resource_selection: StageLatency::ZERO,
        resource_allocation: StageLatency::ZERO,
        job_dispatch: StageLatency::ZERO,
        job_termination: StageLatency::ZERO,
    };

    pub fn stage(&self, stage: Stage) -> StageLatency {
        match stage {
            Stage::Submission => self.submission,
            Stage::QueueManagement => self.queue_management,
            Stage::ResourceIdentification => self.resource_identification,
            Stage::ResourceSelection => self.resource_selection,
            Stage::ResourceAllocation => self.resource_allocation,
            Stage::JobDispatch => self.job_dispatch,
            Stage::JobTermination => self.job_termination,
        }
    }

    /// A jitter halfwidth above the base would make the zero clamp bias the
    /// distribution, so it is rejected.
    pub fn validate(&self) -> Result<(), ModelError> {
        for stage in Stage::ALL {
            let d = self.stage(stage);
            if d.jitter > d.base {
                return Err(ModelError::BadLatencyProfile(format!(
                    "{}: jitter {} exceeds base {}",
                    stage.name(),
                    d.jitter,
                    d.base
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == LatencyProfile::ZERO
    }
}
