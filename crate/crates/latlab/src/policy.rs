//! Scheduler policy configuration and the shipped presets.
//!
//! Three pluggable scheduler models cover the main scheduler families:
//! a monolithic batch scheduler working a global queue on a fixed cycle,
//! a two-level scheduler placing tasks only into periodic resource offers,
//! and a heartbeat scheduler that can allocate a container on a node only
//! when that node's heartbeat arrives.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LatencyProfile, ModelError, StageLatency};
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    MonolithicBatch,
    TwoLevelOffer,
    HeartbeatMapreduce,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::MonolithicBatch => "monolithic-batch",
            Family::TwoLevelOffer => "two-level-offer",
            Family::HeartbeatMapreduce => "heartbeat-mapreduce",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A count that may be unbounded. Serializes as an integer or the string
/// `"unlimited"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Limit {
    Count(u32),
    Unlimited(UnlimitedTag),
}

/// Serde helper so `"unlimited"` is the only accepted string form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnlimitedTag {
    Unlimited,
}

impl Limit {
    pub const UNLIMITED: Limit = Limit::Unlimited(UnlimitedTag::Unlimited);

    pub fn count(self) -> Option<u32> {
        match self {
            Limit::Count(n) => Some(n),
            Limit::Unlimited(_) => None,
        }
    }

    pub fn allows(self, in_flight: u64) -> bool {
        match self {
            Limit::Count(n) => in_flight < n as u64,
            Limit::Unlimited(_) => true,
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Count(n) => write!(f, "{n}"),
            Limit::Unlimited(_) => f.write_str("unlimited"),
        }
    }
}

/// All tuning knobs for one scheduler. Exactly one family's cadence knobs
/// are consulted at run time; the others are ignored but must still pass
/// validation so presets can be edited safely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub family: Family,
    #[serde(default)]
    pub latency: LatencyProfile,
    /// Monolithic: time between scheduling cycles. Zero means the scheduler
    /// reacts to queue and slot changes immediately.
    #[serde(default)]
    pub cycle_period: Micros,
    /// Monolithic: assignments per cycle.
    #[serde(default = "default_unlimited")]
    pub max_dispatch_per_cycle: Limit,
    /// Monolithic: let small jobs run ahead of a blocked gang job when they
    /// cannot delay its reserved start.
    #[serde(default)]
    pub backfill: bool,
    /// Two-level: time between resource-offer rounds (zero = reactive).
    #[serde(default)]
    pub offer_interval: Micros,
    /// Two-level: most slots offered per round.
    #[serde(default = "default_offer_batch")]
    pub offer_batch: u32,
    /// Heartbeat: per-node heartbeat period (zero = reactive). Placement on
    /// a node happens only at its heartbeat, and container allocation costs
    /// one further full round trip before dispatch begins.
    #[serde(default)]
    pub heartbeat_interval: Micros,
    /// Dispatch operations the scheduler keeps in flight at once. This
    /// serialization is the dominant short-task bottleneck.
    #[serde(default = "default_unlimited")]
    pub dispatch_concurrency: Limit,
    /// Dynamic-resource request: memory units per occupied slot.
    #[serde(default = "default_task_memory")]
    pub task_memory: u64,
}

fn default_unlimited() -> Limit {
    Limit::UNLIMITED
}

fn default_offer_batch() -> u32 {
    512
}

fn default_task_memory() -> u64 {
    2048
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("{0}")]
    Latency(#[from] ModelError),
    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },
    #[error("unknown policy preset '{0}'")]
    UnknownPreset(String),
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        self.latency.validate()?;
        if self.max_dispatch_per_cycle.count() == Some(0) {
            return Err(PolicyError::ZeroCount { what: "max_dispatch_per_cycle" });
        }
        if self.dispatch_concurrency.count() == Some(0) {
            return Err(PolicyError::ZeroCount { what: "dispatch_concurrency" });
        }
        if self.offer_batch == 0 {
            return Err(PolicyError::ZeroCount { what: "offer_batch" });
        }
        Ok(())
    }

    /// A configuration with no overhead anywhere: the zero-overhead bound
    /// `T_total = n * t` must hold exactly under it.
    pub fn frictionless(family: Family) -> PolicyConfig {
        PolicyConfig {
            family,
            latency: LatencyProfile::ZERO,
            cycle_period: Micros::ZERO,
            max_dispatch_per_cycle: Limit::UNLIMITED,
            backfill: false,
            offer_interval: Micros::ZERO,
            offer_batch: u32::MAX,
            heartbeat_interval: Micros::ZERO,
            dispatch_concurrency: Limit::UNLIMITED,
            task_memory: 0,
        }
    }
}

/// A named, complete configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPreset {
    pub name: String,
    pub config: PolicyConfig,
}

fn ms(millis: u64) -> Micros {
    Micros::from_millis(millis)
}

/// Stage overheads shared by all presets. These values are calibrated to
/// reproduce the qualitative utilization behavior of real schedulers on
/// short tasks; they are not measurements of any particular installation.
fn baseline_latency(dispatch_base_ms: u64, dispatch_jitter_ms: u64) -> LatencyProfile {
    LatencyProfile {
        submission: StageLatency::new(ms(1), Micros(200)),
        queue_management: StageLatency::new(ms(1), Micros(200)),
        resource_identification: StageLatency::new(ms(2), Micros(500)),
        resource_selection: StageLatency::new(ms(2), Micros(500)),
        resource_allocation: StageLatency::new(ms(3), Micros(500)),
        job_dispatch: StageLatency::new(ms(dispatch_base_ms), ms(dispatch_jitter_ms)),
        job_termination: StageLatency::new(ms(5), ms(1)),
    }
}

/// The four shipped presets. All tuning is disclosed by `latlab policies`.
pub fn presets() -> Vec<PolicyPreset> {
    let base = PolicyConfig {
        family: Family::MonolithicBatch,
        latency: LatencyProfile::ZERO,
        cycle_period: ms(100),
        max_dispatch_per_cycle: Limit::UNLIMITED,
        backfill: false,
        offer_interval: ms(100),
        offer_batch: 512,
        heartbeat_interval: Micros::from_secs(1),
        dispatch_concurrency: Limit::Count(16),
        task_memory: 2048,
    };
    vec![
        PolicyPreset {
            name: "slurm-like".to_string(),
            config: PolicyConfig {
                family: Family::MonolithicBatch,
                latency: baseline_latency(15, 3),
                backfill: true,
                ..base.clone()
            },
        },
        PolicyPreset {
            name: "gridengine-like".to_string(),
            config: PolicyConfig {
                family: Family::MonolithicBatch,
                latency: baseline_latency(25, 5),
                backfill: true,
                ..base.clone()
            },
        },
        PolicyPreset {
            name: "mesos-like".to_string(),
            config: PolicyConfig {
                family: Family::TwoLevelOffer,
                latency: baseline_latency(20, 4),
                ..base.clone()
            },
        },
        PolicyPreset {
            name: "yarn-like".to_string(),
            config: PolicyConfig {
                family: Family::HeartbeatMapreduce,
                latency: baseline_latency(25, 5),
                ..base
            },
        },
    ]
}

pub fn preset(name: &str) -> Result<PolicyPreset, PolicyError> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| PolicyError::UnknownPreset(name.to_string()))
}
