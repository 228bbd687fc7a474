//! Trace replay validation.
//!
//! Replays a trace stream against the task state machine and the cluster
//! capacity limits, independently of the scheduler implementation that
//! produced it. Feed entries incrementally via [`Audit::observe`] (large
//! runs) or all at once via [`replay`].

use std::collections::BTreeMap;

use crate::engine::TraceEntry;
use crate::model::{ArrayId, ClusterSpec, JobArray, Stage, TaskState};
use crate::time::Micros;

const MAX_VIOLATIONS: usize = 32;

pub struct Audit {
    offsets: BTreeMap<ArrayId, usize>,
    states: Vec<TaskState>,
    expected_payload: Vec<Micros>,
    /// Slots currently held per task.
    held: Vec<Vec<(u32, u32)>>,
    slot_busy: Vec<Vec<bool>>,
    node_busy: Vec<u32>,
    node_mem: Vec<u64>,
    slots_per_node: u32,
    mem_cap: u64,
    task_memory: u64,
    last_time: Micros,
    max_node_busy: u32,
    payload_completed: Micros,
    transitions: u64,
    entries: u64,
    violations: Vec<String>,
}

/// Outcome of replaying one trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub entries: u64,
    pub transitions: u64,
    pub payload_completed: Micros,
    pub max_node_busy: u32,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Work conservation: the payload completed must equal the payload
    /// submitted, or the run dropped or invented work.
    pub fn conserves(&self, expected_payload: Micros) -> bool {
        self.payload_completed == expected_payload
    }
}

impl Audit {
    pub fn new(workload: &[JobArray], cluster: &ClusterSpec, task_memory: u64) -> Audit {
        let mut offsets = BTreeMap::new();
        let mut states = Vec::new();
        let mut expected_payload = Vec::new();
        for a in workload {
            offsets.insert(a.id, states.len());
            for t in &a.tasks {
                states.push(TaskState::PendingSubmission);
                expected_payload.push(t.payload);
            }
        }
        let held = vec![Vec::new(); states.len()];
        Audit {
            offsets,
            states,
            expected_payload,
            held,
            slot_busy: vec![
                vec![false; cluster.slots_per_node as usize];
                cluster.node_count as usize
            ],
            node_busy: vec![0; cluster.node_count as usize],
            node_mem: vec![0; cluster.node_count as usize],
            slots_per_node: cluster.slots_per_node,
            mem_cap: cluster.memory_per_node(),
            task_memory,
            last_time: Micros::ZERO,
            max_node_busy: 0,
            payload_completed: Micros::ZERO,
            transitions: 0,
            entries: 0,
            violations: Vec::new(),
        }
    }

    fn violation(&mut self, msg: String) {
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(msg);
        }
    }

    pub fn observe(&mut self, e: &TraceEntry) {
        self.entries += 1;
        if e.time < self.last_time {
            self.violation(format!(
                "clock moved backwards: {} after {}",
                e.time.0, self.last_time.0
            ));
        }
        self.last_time = self.last_time.max(e.time);

        let Some(task) = e.task else { return };
        let Some(&offset) = self.offsets.get(&task.array) else {
            self.violation(format!("{task}: unknown array in trace"));
            return;
        };
        let g = offset + task.index as usize;

        if let (Some(before), Some(after)) = (e.before, e.after) {
            self.transitions += 1;
            if self.states[g] != before {
                self.violation(format!(
                    "{task}: trace says {before} but replay holds {}",
                    self.states[g]
                ));
            }
            if !before.can_transition_to(after) {
                self.violation(format!("{task}: illegal transition {before} -> {after}"));
            }
            self.states[g] = after;

            if after == TaskState::Dispatching {
                self.reserve(g, task, e);
            }
            if after == TaskState::Done {
                self.payload_completed += self.expected_payload[g];
            }
        }

        // Slots are held from dispatch until the termination stage ends,
        // for both successful and failed runs.
        if e.kind == "termination-complete" && e.stage == Some(Stage::JobTermination) {
            self.release(g);
        }
    }

    fn reserve(&mut self, g: usize, task: crate::model::TaskRef, e: &TraceEntry) {
        if e.slots.is_empty() {
            self.violation(format!("{task}: dispatching with no slot assignment"));
            return;
        }
        for &(node, slot) in &e.slots {
            let n = node.0 as usize;
            if self.slot_busy[n][slot as usize] {
                self.violation(format!("{task}: slot ({},{slot}) oversubscribed", node.0));
                continue;
            }
            self.slot_busy[n][slot as usize] = true;
            self.node_busy[n] += 1;
            self.node_mem[n] += self.task_memory;
            if self.node_busy[n] > self.slots_per_node {
                self.violation(format!("node {} over slot capacity", node.0));
            }
            if self.node_mem[n] > self.mem_cap {
                self.violation(format!("node {} over memory capacity", node.0));
            }
            self.max_node_busy = self.max_node_busy.max(self.node_busy[n]);
            self.held[g].push((node.0, slot));
        }
    }

    fn release(&mut self, g: usize) {
        for (node, slot) in std::mem::take(&mut self.held[g]) {
            let n = node as usize;
            self.slot_busy[n][slot as usize] = false;
            self.node_busy[n] -= 1;
            self.node_mem[n] -= self.task_memory;
        }
    }

    pub fn finish(self) -> AuditReport {
        AuditReport {
            entries: self.entries,
            transitions: self.transitions,
            payload_completed: self.payload_completed,
            max_node_busy: self.max_node_busy,
            violations: self.violations,
        }
    }
}

/// Replays a collected trace in one call.
pub fn replay(
    trace: &[TraceEntry],
    workload: &[JobArray],
    cluster: &ClusterSpec,
    task_memory: u64,
) -> AuditReport {
    let mut audit = Audit::new(workload, cluster, task_memory);
    for e in trace {
        audit.observe(e);
    }
    audit.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, TaskRef};

    fn entry(time: u64, kind: &'static str) -> TraceEntry {
        TraceEntry {
            time: Micros(time),
            kind,
            array: None,
            task: Some(TaskRef { array: ArrayId(0), index: 0 }),
            before: None,
            after: None,
            stage: None,
            latency: Micros::ZERO,
            slots: Vec::new(),
        }
    }

    fn small_setup() -> (Vec<JobArray>, ClusterSpec) {
        (
            vec![JobArray::uniform(ArrayId(0), 2, Micros::from_secs(10))],
            ClusterSpec {
                node_count: 1,
                slots_per_node: 2,
                dynamic_resources: BTreeMap::new(),
            },
        )
    }

    #[test]
    fn illegal_transition_is_flagged() {
        let (workload, cluster) = small_setup();
        let mut e = entry(5, "queue-ready");
        e.before = Some(TaskState::PendingSubmission);
        e.after = Some(TaskState::Running);
        let report = replay(&[e], &workload, &cluster, 0);
        assert!(!report.ok());
        assert!(report.violations[0].contains("illegal transition"));
    }

    #[test]
    fn divergent_before_state_is_flagged() {
        let (workload, cluster) = small_setup();
        let mut e = entry(5, "scheduling-cycle");
        e.before = Some(TaskState::Queued); // replay still holds pending-submission
        e.after = Some(TaskState::Dispatching);
        e.slots = vec![(NodeId(0), 0)];
        let report = replay(&[e], &workload, &cluster, 0);
        assert!(report.violations.iter().any(|v| v.contains("replay holds")));
    }

    #[test]
    fn oversubscription_is_flagged() {
        let (workload, cluster) = small_setup();
        let mk = |index: u32| {
            let mut a = entry(0, "queue-ready");
            a.task = Some(TaskRef { array: ArrayId(0), index });
            a.before = Some(TaskState::PendingSubmission);
            a.after = Some(TaskState::Queued);
            let mut b = entry(1, "scheduling-cycle");
            b.task = Some(TaskRef { array: ArrayId(0), index });
            b.before = Some(TaskState::Queued);
            b.after = Some(TaskState::Dispatching);
            b.slots = vec![(NodeId(0), 0)]; // both tasks claim slot 0
            [a, b]
        };
        let trace = [mk(0), mk(1)].concat();
        let report = replay(&trace, &workload, &cluster, 0);
        assert!(report.violations.iter().any(|v| v.contains("oversubscribed")));
    }

    #[test]
    fn backwards_clock_is_flagged() {
        let (workload, cluster) = small_setup();
        let report = replay(&[entry(5, "submit"), entry(3, "submit")], &workload, &cluster, 0);
        assert!(report.violations.iter().any(|v| v.contains("clock moved backwards")));
    }
}
