//! Job arrays, tasks and the task state machine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClusterSpec;
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArrayId(pub u32);

impl fmt::Display for ArrayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "array#{}", self.0)
    }
}

/// Identifies one task: the array it belongs to and its 0-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskRef {
    pub array: ArrayId,
    pub index: u32,
}

impl fmt::Display for TaskRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.array, self.index)
    }
}

/// One task of an array. `payload` is the productive portion of `duration`;
/// they differ only for bundled tasks, where switching between datasets
/// inside a launch costs `duration - payload`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub duration: Micros,
    pub payload: Micros,
    /// How many original tasks this one carries (1 unless bundled).
    pub payload_units: u32,
}

impl TaskSpec {
    pub fn simple(duration: Micros) -> TaskSpec {
        TaskSpec {
            duration,
            payload: duration,
            payload_units: 1,
        }
    }
}

/// A single submission expanding into many tasks sharing one specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobArray {
    pub id: ArrayId,
    pub tasks: Vec<TaskSpec>,
    /// Slots a task occupies while active. 1 for array tasks; >1 models a
    /// synchronously-parallel job whose slots must all be allocated at once.
    pub slots_per_task: u32,
    pub depends_on: Vec<ArrayId>,
    pub max_restarts: u32,
    pub submit_time: Micros,
}

impl JobArray {
    /// An array of `task_count` identical tasks, the common case.
    pub fn uniform(id: ArrayId, task_count: u32, task_duration: Micros) -> JobArray {
        JobArray {
            id,
            tasks: vec![TaskSpec::simple(task_duration); task_count as usize],
            slots_per_task: 1,
            depends_on: Vec::new(),
            max_restarts: 0,
            submit_time: Micros::ZERO,
        }
    }

    pub fn task_count(&self) -> u32 {
        self.tasks.len() as u32
    }

    pub fn total_payload(&self) -> Micros {
        self.tasks.iter().map(|t| t.payload).sum()
    }
}

/// Task lifecycle states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskState {
    PendingSubmission,
    Queued,
    Dispatching,
    Running,
    Terminating,
    Done,
    Failed,
}

impl TaskState {
    /// The legal-transition table. `Failed -> Queued` is the restart path
    /// and is only taken while restarts remain.
    pub fn can_transition_to(self, next: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, next),
            (PendingSubmission, Queued)
                | (Queued, Dispatching)
                | (Dispatching, Running)
                | (Running, Terminating)
                | (Running, Failed)
                | (Terminating, Done)
                | (Failed, Queued)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskState::PendingSubmission => "pending-submission",
            TaskState::Queued => "queued",
            TaskState::Dispatching => "dispatching",
            TaskState::Running => "running",
            TaskState::Terminating => "terminating",
            TaskState::Done => "done",
            TaskState::Failed => "failed",
        }
    }
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A problem found in a submitted workload, tied to the offending array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadIssue {
    DuplicateId(ArrayId),
    UnknownDependency { array: ArrayId, missing: ArrayId },
    DependencyCycle { member: ArrayId },
    OversizedTask { array: ArrayId, slots_per_task: u32, cluster_slots: u64 },
    EmptyArray(ArrayId),
}

impl fmt::Display for WorkloadIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadIssue::DuplicateId(id) => write!(f, "{id}: duplicate array id"),
            WorkloadIssue::UnknownDependency { array, missing } => {
                write!(f, "{array}: depends on unknown {missing}")
            }
            WorkloadIssue::DependencyCycle { member } => {
                write!(f, "{member}: member of a dependency cycle")
            }
            WorkloadIssue::OversizedTask { array, slots_per_task, cluster_slots } => write!(
                f,
                "{array}: slots_per_task {slots_per_task} exceeds cluster capacity {cluster_slots}"
            ),
            WorkloadIssue::EmptyArray(id) => write!(f, "{id}: array has no tasks"),
        }
    }
}

/// Checks a workload against a cluster: unique ids, acyclic dependencies,
/// tasks that physically fit.
pub fn validate_workload(
    arrays: &[JobArray],
    cluster: &ClusterSpec,
) -> Result<(), Vec<WorkloadIssue>> {
    let mut issues = Vec::new();
    let mut seen = BTreeSet::new();
    for a in arrays {
        if !seen.insert(a.id) {
            issues.push(WorkloadIssue::DuplicateId(a.id));
        }
        if a.tasks.is_empty() {
            issues.push(WorkloadIssue::EmptyArray(a.id));
        }
        if a.slots_per_task as u64 > cluster.total_slots() || a.slots_per_task == 0 {
            issues.push(WorkloadIssue::OversizedTask {
                array: a.id,
                slots_per_task: a.slots_per_task,
                cluster_slots: cluster.total_slots(),
            });
        }
        for dep in &a.depends_on {
            if !arrays.iter().any(|b| b.id == *dep) {
                issues.push(WorkloadIssue::UnknownDependency { array: a.id, missing: *dep });
            }
        }
    }

    // Kahn's algorithm over the dependency edges; whatever survives with a
    // nonzero indegree sits on a cycle.
    let ids: Vec<ArrayId> = arrays.iter().map(|a| a.id).collect();
    let mut indegree: BTreeMap<ArrayId, usize> = ids.iter().map(|id| (*id, 0)).collect();
    let mut dependents: BTreeMap<ArrayId, Vec<ArrayId>> = BTreeMap::new();
    for a in arrays {
        for dep in &a.depends_on {
            if indegree.contains_key(dep) {
                *indegree.get_mut(&a.id).unwrap() += 1;
                dependents.entry(*dep).or_default().push(a.id);
            }
        }
    }
    let mut ready: Vec<ArrayId> =
        indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut resolved = 0usize;
    while let Some(id) = ready.pop() {
        resolved += 1;
        for dep in dependents.get(&id).cloned().unwrap_or_default() {
            let d = indegree.get_mut(&dep).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(dep);
            }
        }
    }
    if resolved < indegree.len() {
        for (id, d) in &indegree {
            if *d > 0 {
                issues.push(WorkloadIssue::DependencyCycle { member: *id });
            }
        }
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}
