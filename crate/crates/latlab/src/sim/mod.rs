//! The scheduler world: policies realized as engine-resident state machines.
//!
//! One [`World`] owns the cluster occupancy, the task queue and the dispatch
//! pipeline for a single trial, and interprets events according to the
//! configured scheduler family:
//!
//! * monolithic-batch: one global queue worked every `cycle_period`
//!   (`cycle_period == 0` reacts to queue/slot changes immediately);
//! * two-level-offer: the resource manager emits offers of up to
//!   `offer_batch` free slots every `offer_interval`; the single built-in
//!   framework accepts greedily in FIFO order, and unaccepted offers return
//!   next round;
//! * heartbeat-mapreduce: tasks can be placed on a node only at that node's
//!   heartbeat, and container allocation costs one further full heartbeat
//!   round trip before dispatch begins.

mod pipeline;
mod pool;

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::engine::{Engine, EngineError, Event, EventKind, Handler, TraceEntry, TraceSink};
use crate::model::{
    validate_workload, ArrayId, ClusterSpec, JobArray, NodeId, Stage, StageTotals, TaskRef,
    TaskState,
};
use crate::policy::{Family, Limit, PolicyConfig, PolicyError};
use crate::time::Micros;

use pipeline::DispatchPipeline;
use pool::SlotPool;

/// Forces the first `failures` runs of one task to terminate erroneously,
/// exercising the restart path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureSpec {
    pub task: TaskRef,
    pub failures: u32,
}

/// Inputs for one simulated trial.
pub struct TrialSetup<'a> {
    pub cluster: &'a ClusterSpec,
    pub policy: &'a PolicyConfig,
    pub workload: &'a [JobArray],
    pub failures: &'a [FailureSpec],
}

/// Raw measurements out of one trial, before any benchmark math.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub first_submit: Micros,
    pub last_termination: Micros,
    /// First submission to last termination-complete.
    pub t_total: Micros,
    /// Dispatch operations performed (re-runs included).
    pub launches: u64,
    pub stage_totals: StageTotals,
    pub tasks_completed: u64,
    pub tasks_restarted: u64,
    /// Productive virtual time of successfully completed runs.
    pub payload_completed: Micros,
    pub events_executed: u64,
    /// Times a backfill head-of-queue reservation was overrun (kept at zero
    /// by construction for jitter-free profiles).
    pub reservation_overruns: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("slot ({node},{slot}) assigned while occupied at {at}: accounting bug")]
    SlotOccupied { node: u32, slot: u32, at: Micros },
    #[error("{array} needs {need} slots per task but {limit} limits placement to {max}")]
    GangUnplaceable { array: ArrayId, need: u32, limit: &'static str, max: u32 },
    #[error("{task} exhausted its restarts at {at}; work would be dropped")]
    RestartsExhausted { task: TaskRef, at: Micros },
    #[error("failure injection references unknown task {task}")]
    UnknownFailureTask { task: TaskRef },
}

struct ArrayRt {
    id: ArrayId,
    first_task: usize,
    task_count: u32,
    slots_per_task: u32,
    max_restarts: u32,
    deps_remaining: u32,
    dependents: Vec<usize>,
    /// QueueReady has fired.
    queued: bool,
    /// Tasks handed to the eligible queue.
    released: bool,
    tasks_done: u32,
}

struct TaskRt {
    state: TaskState,
    duration: Micros,
    payload: Micros,
    restart_count: u32,
    will_fail: u32,
    slots: Vec<(u32, u32)>,
    /// Stage latency drawn ahead of the event that will report it.
    pending_stage_latency: Micros,
    /// Estimated slot release, for backfill reservations.
    proj_release: Micros,
}

/// Single-trial scheduler state machine; drive it with
/// [`Engine::run_until_idle`] or use [`simulate`].
pub struct World<'a> {
    policy: &'a PolicyConfig,
    arrays: Vec<ArrayRt>,
    array_index: BTreeMap<ArrayId, usize>,
    tasks: Vec<TaskRt>,
    eligible: VecDeque<usize>,
    pool: SlotPool,
    pipeline: DispatchPipeline,
    outstanding: u64,
    cycle_pending: bool,
    offer_pending: bool,
    heartbeat_pending: Vec<bool>,
    /// Head-of-queue projected start while a gang job is blocked.
    head_reservation: Option<(usize, Micros)>,
    jitter_free: bool,
    trial_failed: Option<TaskRef>,
    // measurements
    first_submit: Option<Micros>,
    last_termination: Micros,
    launches: u64,
    stage_totals: StageTotals,
    tasks_completed: u64,
    tasks_restarted: u64,
    payload_completed: Micros,
    reservation_overruns: u64,
}

impl<'a> World<'a> {
    pub fn new(setup: &TrialSetup<'a>) -> Result<World<'a>, SimError> {
        setup.policy.validate()?;
        validate_workload(setup.workload, setup.cluster).map_err(|issues| {
            SimError::InvalidWorkload(
                issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
            )
        })?;
        // Placement limits that the generic validation cannot know about.
        for a in setup.workload {
            match setup.policy.family {
                Family::HeartbeatMapreduce if a.slots_per_task > setup.cluster.slots_per_node => {
                    return Err(SimError::GangUnplaceable {
                        array: a.id,
                        need: a.slots_per_task,
                        limit: "per-node container placement",
                        max: setup.cluster.slots_per_node,
                    });
                }
                Family::TwoLevelOffer if a.slots_per_task > setup.policy.offer_batch => {
                    return Err(SimError::GangUnplaceable {
                        array: a.id,
                        need: a.slots_per_task,
                        limit: "offer_batch",
                        max: setup.policy.offer_batch,
                    });
                }
                _ => {}
            }
        }

        let array_index: BTreeMap<ArrayId, usize> =
            setup.workload.iter().enumerate().map(|(i, a)| (a.id, i)).collect();
        let mut arrays = Vec::with_capacity(setup.workload.len());
        let mut tasks = Vec::new();
        for a in setup.workload {
            arrays.push(ArrayRt {
                id: a.id,
                first_task: tasks.len(),
                task_count: a.task_count(),
                slots_per_task: a.slots_per_task,
                max_restarts: a.max_restarts,
                deps_remaining: a.depends_on.len() as u32,
                dependents: Vec::new(),
                queued: false,
                released: false,
                tasks_done: 0,
            });
            for spec in &a.tasks {
                tasks.push(TaskRt {
                    state: TaskState::PendingSubmission,
                    duration: spec.duration,
                    payload: spec.payload,
                    restart_count: 0,
                    will_fail: 0,
                    slots: Vec::new(),
                    pending_stage_latency: Micros::ZERO,
                    proj_release: Micros::ZERO,
                });
            }
        }
        for (i, a) in setup.workload.iter().enumerate() {
            for dep in &a.depends_on {
                let di = array_index[dep];
                arrays[di].dependents.push(i);
            }
        }
        for f in setup.failures {
            let ai = *array_index
                .get(&f.task.array)
                .ok_or(SimError::UnknownFailureTask { task: f.task })?;
            if f.task.index >= arrays[ai].task_count {
                return Err(SimError::UnknownFailureTask { task: f.task });
            }
            tasks[arrays[ai].first_task + f.task.index as usize].will_fail = f.failures;
        }

        let jitter_free =
            Stage::ALL.iter().all(|s| setup.policy.latency.stage(*s).jitter.is_zero());
        let outstanding = tasks.len() as u64;
        Ok(World {
            policy: setup.policy,
            arrays,
            array_index,
            tasks,
            eligible: VecDeque::new(),
            pool: SlotPool::new(setup.cluster),
            pipeline: DispatchPipeline::new(setup.policy.dispatch_concurrency),
            outstanding,
            cycle_pending: false,
            offer_pending: false,
            heartbeat_pending: vec![false; setup.cluster.node_count as usize],
            head_reservation: None,
            jitter_free,
            trial_failed: None,
            first_submit: None,
            last_termination: Micros::ZERO,
            launches: 0,
            stage_totals: StageTotals::default(),
            tasks_completed: 0,
            tasks_restarted: 0,
            payload_completed: Micros::ZERO,
            reservation_overruns: 0,
        })
    }

    /// Posts the submissions and the family's cadence events.
    pub fn prime(&mut self, engine: &mut Engine<'_>, workload: &[JobArray]) -> Result<(), SimError> {
        for a in workload {
            engine.post(a.submit_time, EventKind::Submit { array: a.id })?;
        }
        match self.policy.family {
            Family::MonolithicBatch if !self.policy.cycle_period.is_zero() => {
                engine.post(Micros::ZERO, EventKind::SchedulingCycle)?;
            }
            Family::TwoLevelOffer if !self.policy.offer_interval.is_zero() => {
                engine.post(Micros::ZERO, EventKind::OfferRound)?;
            }
            Family::HeartbeatMapreduce if !self.policy.heartbeat_interval.is_zero() => {
                // Heartbeats are staggered across the interval so placement
                // capacity is spread evenly in time.
                let interval = self.policy.heartbeat_interval.0;
                let nodes = self.pool.node_count() as u64;
                for n in 0..self.pool.node_count() {
                    let offset = Micros(interval * n as u64 / nodes);
                    engine.post(offset, EventKind::Heartbeat { node: NodeId(n) })?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn outcome(&self, events_executed: u64) -> SimOutcome {
        let first = self.first_submit.unwrap_or(Micros::ZERO);
        SimOutcome {
            first_submit: first,
            last_termination: self.last_termination,
            t_total: self.last_termination.saturating_sub(first),
            launches: self.launches,
            stage_totals: self.stage_totals,
            tasks_completed: self.tasks_completed,
            tasks_restarted: self.tasks_restarted,
            payload_completed: self.payload_completed,
            events_executed,
            reservation_overruns: self.reservation_overruns,
        }
    }

    pub fn failed_task(&self) -> Option<TaskRef> {
        self.trial_failed
    }

    fn task_ref(&self, g: usize) -> TaskRef {
        let ai = self.array_of(g);
        TaskRef {
            array: self.arrays[ai].id,
            index: (g - self.arrays[ai].first_task) as u32,
        }
    }

    fn global_index(&self, t: TaskRef) -> usize {
        self.arrays[self.array_index[&t.array]].first_task + t.index as usize
    }

    /// Arrays are laid out contiguously; find the owner by range.
    fn array_of(&self, g: usize) -> usize {
        match self.arrays.binary_search_by(|a| a.first_task.cmp(&g)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn charge(&mut self, stage: Stage, amount: Micros) {
        self.stage_totals.charge(stage, amount);
    }

    fn transition(
        &mut self,
        engine: &mut Engine<'_>,
        kind: &'static str,
        g: usize,
        to: TaskState,
        stage: Option<Stage>,
        latency: Micros,
    ) {
        let from = self.tasks[g].state;
        debug_assert!(
            from.can_transition_to(to),
            "illegal transition {from} -> {to} at {}",
            engine.now()
        );
        self.tasks[g].state = to;
        if engine.tracing_enabled() {
            let slots = if to == TaskState::Dispatching {
                self.tasks[g]
                    .slots
                    .iter()
                    .map(|&(n, s)| (NodeId(n), s))
                    .collect()
            } else {
                Vec::new()
            };
            engine.trace(TraceEntry {
                time: engine.now(),
                kind,
                array: None,
                task: Some(self.task_ref(g)),
                before: Some(from),
                after: Some(to),
                stage,
                latency,
                slots,
            });
        }
    }

    fn trace_charge(
        &self,
        engine: &mut Engine<'_>,
        kind: &'static str,
        array: Option<ArrayId>,
        task: Option<usize>,
        stage: Stage,
        latency: Micros,
    ) {
        if engine.tracing_enabled() {
            engine.trace(TraceEntry {
                time: engine.now(),
                kind,
                array,
                task: task.map(|g| self.task_ref(g)),
                before: None,
                after: None,
                stage: Some(stage),
                latency,
                slots: Vec::new(),
            });
        }
    }

    /// Reactive trigger: with a zero cadence interval the family's
    /// scheduling event is posted immediately (coalesced) whenever queue or
    /// slot state changes.
    fn kick(&mut self, engine: &mut Engine<'_>) -> Result<(), SimError> {
        if self.eligible.is_empty() {
            return Ok(());
        }
        match self.policy.family {
            Family::MonolithicBatch if self.policy.cycle_period.is_zero() => {
                if !self.cycle_pending {
                    self.cycle_pending = true;
                    engine.post(engine.now(), EventKind::SchedulingCycle)?;
                }
            }
            Family::TwoLevelOffer if self.policy.offer_interval.is_zero() => {
                if !self.offer_pending {
                    self.offer_pending = true;
                    engine.post(engine.now(), EventKind::OfferRound)?;
                }
            }
            Family::HeartbeatMapreduce if self.policy.heartbeat_interval.is_zero() => {
                for n in 0..self.pool.node_count() {
                    if self.pool.node_has_free(n) && !self.heartbeat_pending[n as usize] {
                        self.heartbeat_pending[n as usize] = true;
                        engine.post(engine.now(), EventKind::Heartbeat { node: NodeId(n) })?;
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn release_array_if_ready(&mut self, ai: usize) {
        let a = &self.arrays[ai];
        if a.queued && a.deps_remaining == 0 && !a.released {
            self.arrays[ai].released = true;
            let first = self.arrays[ai].first_task;
            let count = self.arrays[ai].task_count as usize;
            for g in first..first + count {
                self.eligible.push_back(g);
            }
        }
    }

    // ------------------------------------------------------------------
    // event handlers
    // ------------------------------------------------------------------

    fn on_submit(&mut self, engine: &mut Engine<'_>, id: ArrayId) -> Result<(), SimError> {
        let now = engine.now();
        self.first_submit = Some(self.first_submit.map_or(now, |f| f.min(now)));
        let d_submit = engine.draw_latency(self.policy.latency.submission);
        let d_queue = engine.draw_latency(self.policy.latency.queue_management);
        self.charge(Stage::Submission, d_submit);
        self.charge(Stage::QueueManagement, d_queue);
        self.trace_charge(engine, "submit", Some(id), None, Stage::Submission, d_submit);
        self.trace_charge(engine, "submit", Some(id), None, Stage::QueueManagement, d_queue);
        engine.post(now + d_submit + d_queue, EventKind::QueueReady { array: id })?;
        Ok(())
    }

    fn on_queue_ready(&mut self, engine: &mut Engine<'_>, id: ArrayId) -> Result<(), SimError> {
        let ai = self.array_index[&id];
        self.arrays[ai].queued = true;
        let first = self.arrays[ai].first_task;
        let count = self.arrays[ai].task_count as usize;
        for g in first..first + count {
            self.transition(engine, "queue-ready", g, TaskState::Queued, None, Micros::ZERO);
        }
        self.release_array_if_ready(ai);
        self.kick(engine)
    }

    fn on_scheduling_cycle(&mut self, engine: &mut Engine<'_>) -> Result<(), SimError> {
        self.cycle_pending = false;
        if self.policy.family != Family::MonolithicBatch {
            return Ok(());
        }
        self.assign_fifo(engine, Scope::Cluster, self.policy.max_dispatch_per_cycle)?;
        if !self.policy.cycle_period.is_zero() && self.outstanding > 0 {
            engine.post(engine.now() + self.policy.cycle_period, EventKind::SchedulingCycle)?;
        }
        Ok(())
    }

    fn on_offer_round(&mut self, engine: &mut Engine<'_>) -> Result<(), SimError> {
        self.offer_pending = false;
        if self.policy.family != Family::TwoLevelOffer {
            return Ok(());
        }
        let offered = self.pool.offer(self.policy.offer_batch, self.policy.task_memory);
        self.assign_fifo(engine, Scope::Offered(offered), self.policy.max_dispatch_per_cycle)?;
        if !self.policy.offer_interval.is_zero() && self.outstanding > 0 {
            engine.post(engine.now() + self.policy.offer_interval, EventKind::OfferRound)?;
        }
        Ok(())
    }

    fn on_heartbeat(&mut self, engine: &mut Engine<'_>, node: NodeId) -> Result<(), SimError> {
        self.heartbeat_pending[node.0 as usize] = false;
        if self.policy.family != Family::HeartbeatMapreduce {
            return Ok(());
        }
        self.assign_first_fit_on_node(engine, node.0, self.policy.max_dispatch_per_cycle)?;
        if !self.policy.heartbeat_interval.is_zero() && self.outstanding > 0 {
            engine.post(
                engine.now() + self.policy.heartbeat_interval,
                EventKind::Heartbeat { node },
            )?;
        }
        Ok(())
    }

    fn on_dispatch_complete(&mut self, engine: &mut Engine<'_>, t: TaskRef) -> Result<(), SimError> {
        let g = self.global_index(t);
        let latency = self.tasks[g].pending_stage_latency;
        self.transition(
            engine,
            "dispatch-complete",
            g,
            TaskState::Running,
            Some(Stage::JobDispatch),
            latency,
        );
        self.launches += 1;
        let duration = self.tasks[g].duration;
        let kind = if self.tasks[g].will_fail > 0 {
            self.tasks[g].will_fail -= 1;
            EventKind::FailureInjected { task: t }
        } else {
            EventKind::TaskComplete { task: t }
        };
        engine.post(engine.now() + duration, kind)?;
        Ok(())
    }

    fn on_run_finished(
        &mut self,
        engine: &mut Engine<'_>,
        t: TaskRef,
        failed: bool,
    ) -> Result<(), SimError> {
        let g = self.global_index(t);
        let (kind, to) = if failed {
            ("failure-injected", TaskState::Failed)
        } else {
            ("task-complete", TaskState::Terminating)
        };
        self.transition(engine, kind, g, to, None, Micros::ZERO);
        let d_term = engine.draw_latency(self.policy.latency.job_termination);
        self.charge(Stage::JobTermination, d_term);
        self.tasks[g].pending_stage_latency = d_term;
        self.tasks[g].proj_release = engine.now() + d_term;
        engine.post(engine.now() + d_term, EventKind::TerminationComplete { task: t })?;
        Ok(())
    }

    fn on_termination_complete(
        &mut self,
        engine: &mut Engine<'_>,
        t: TaskRef,
    ) -> Result<(), SimError> {
        let g = self.global_index(t);
        let now = engine.now();
        let slots = std::mem::take(&mut self.tasks[g].slots);
        self.pool.release(&slots, self.policy.task_memory);
        self.last_termination = self.last_termination.max(now);
        let latency = self.tasks[g].pending_stage_latency;

        if self.tasks[g].state == TaskState::Terminating {
            self.transition(
                engine,
                "termination-complete",
                g,
                TaskState::Done,
                Some(Stage::JobTermination),
                latency,
            );
            self.tasks_completed += 1;
            self.payload_completed += self.tasks[g].payload;
            self.outstanding -= 1;
            let ai = self.array_of(g);
            self.arrays[ai].tasks_done += 1;
            if self.arrays[ai].tasks_done == self.arrays[ai].task_count {
                for di in self.arrays[ai].dependents.clone() {
                    self.arrays[di].deps_remaining -= 1;
                    self.release_array_if_ready(di);
                }
            }
        } else {
            debug_assert_eq!(self.tasks[g].state, TaskState::Failed);
            self.trace_charge(
                engine,
                "termination-complete",
                None,
                Some(g),
                Stage::JobTermination,
                latency,
            );
            let ai = self.array_of(g);
            if self.tasks[g].restart_count < self.arrays[ai].max_restarts {
                self.tasks[g].restart_count += 1;
                self.tasks_restarted += 1;
                self.transition(engine, "termination-complete", g, TaskState::Queued, None, Micros::ZERO);
                self.eligible.push_back(g);
            } else {
                self.outstanding -= 1;
                if self.trial_failed.is_none() {
                    self.trial_failed = Some(t);
                }
            }
        }
        self.kick(engine)
    }

    // ------------------------------------------------------------------
    // assignment
    // ------------------------------------------------------------------

    fn slots_needed(&self, g: usize) -> u32 {
        self.arrays[self.array_of(g)].slots_per_task
    }

    fn collect_for(&self, scope: &Scope, need: u32) -> Option<Vec<(u32, u32)>> {
        let mem = self.policy.task_memory;
        match scope {
            Scope::Cluster => self.pool.collect_cluster(need, mem),
            Scope::Offered(offered) => self.pool.collect_offered(offered, need, mem),
        }
    }

    /// Strict FIFO over the eligible queue; stops at the first task that
    /// does not fit. With backfill enabled (monolithic only), a blocked
    /// gang head gets a reservation and smaller jobs may run ahead if they
    /// cannot delay it.
    fn assign_fifo(
        &mut self,
        engine: &mut Engine<'_>,
        mut scope: Scope,
        cap: Limit,
    ) -> Result<(), SimError> {
        let mut assigned: u64 = 0;
        while cap.allows(assigned) {
            let Some(&head) = self.eligible.front() else { break };
            let need = self.slots_needed(head);
            match self.collect_for(&scope, need) {
                Some(slots) => {
                    self.eligible.pop_front();
                    if let Some((reserved, projected)) = self.head_reservation {
                        if reserved == head {
                            if self.jitter_free && engine.now() > projected {
                                self.reservation_overruns += 1;
                            }
                            self.head_reservation = None;
                        }
                    }
                    scope.consume(&slots);
                    self.assign(engine, head, slots)?;
                    assigned += 1;
                }
                None => {
                    if self.policy.family == Family::MonolithicBatch
                        && self.policy.backfill
                        && need > 1
                    {
                        self.backfill_behind_head(engine, need, cap, &mut assigned)?;
                    }
                    break;
                }
            }
        }
        Ok(())
    }

    /// Conservative (EASY-style) backfill: reserve a start time for the
    /// blocked head based on projected slot releases, then let later queue
    /// entries run only if they fit now and their projected finish does not
    /// push past the reservation.
    fn backfill_behind_head(
        &mut self,
        engine: &mut Engine<'_>,
        head_need: u32,
        cap: Limit,
        assigned: &mut u64,
    ) -> Result<(), SimError> {
        let head = *self.eligible.front().expect("backfill requires a blocked head");
        let mut free = self.pool.free_total() as u32;
        debug_assert!(free < head_need);
        let mut releases: Vec<(Micros, u32)> = self
            .tasks
            .iter()
            .filter(|t| !t.slots.is_empty())
            .map(|t| (t.proj_release, t.slots.len() as u32))
            .collect();
        releases.sort_unstable();
        let mut projected_start = None;
        for (at, count) in releases {
            free += count;
            if free >= head_need {
                projected_start = Some(at);
                break;
            }
        }
        // Capacity validation guarantees the head fits eventually.
        let Some(projected_start) = projected_start else { return Ok(()) };
        self.head_reservation = Some((head, projected_start));

        let latency = &self.policy.latency;
        let est_decision = latency.resource_identification.base
            + latency.resource_selection.base
            + latency.resource_allocation.base;
        let mut i = 1;
        while i < self.eligible.len() && cap.allows(*assigned) {
            let cand = self.eligible[i];
            let need = self.slots_needed(cand);
            let fits = self.pool.collect_cluster(need, self.policy.task_memory);
            match fits {
                Some(slots) => {
                    let entry = engine.now() + est_decision;
                    let est_start = self.pipeline.peek_start(entry);
                    let est_finish = est_start
                        + latency.job_dispatch.base
                        + self.tasks[cand].duration
                        + latency.job_termination.base;
                    if est_finish <= projected_start {
                        self.eligible.remove(i);
                        self.assign(engine, cand, slots)?;
                        *assigned += 1;
                        // do not advance i: the element now at i is unseen
                    } else {
                        i += 1;
                    }
                }
                None => i += 1,
            }
        }
        Ok(())
    }

    /// Heartbeat-family placement: first fit against one node's free slots.
    /// For single-slot workloads this is exactly FIFO; a gang task too wide
    /// for the node is skipped rather than blocking the queue, since
    /// containers are per-node.
    fn assign_first_fit_on_node(
        &mut self,
        engine: &mut Engine<'_>,
        node: u32,
        cap: Limit,
    ) -> Result<(), SimError> {
        let mut assigned: u64 = 0;
        let mut i = 0;
        while i < self.eligible.len() && cap.allows(assigned) {
            if !self.pool.node_has_free(node) {
                break;
            }
            let g = self.eligible[i];
            let need = self.slots_needed(g);
            match self.pool.collect_node(node, need, self.policy.task_memory) {
                Some(slots) => {
                    self.eligible.remove(i);
                    self.assign(engine, g, slots)?;
                    assigned += 1;
                }
                None => i += 1,
            }
        }
        Ok(())
    }

    /// Reserves slots and walks the task through the decision stages into
    /// the dispatch pipeline.
    fn assign(
        &mut self,
        engine: &mut Engine<'_>,
        g: usize,
        slots: Vec<(u32, u32)>,
    ) -> Result<(), SimError> {
        let now = engine.now();
        self.pool.reserve(&slots, self.policy.task_memory, now)?;
        self.tasks[g].slots = slots;

        let latency = &self.policy.latency;
        let d_ident = engine.draw_latency(latency.resource_identification);
        let d_select = engine.draw_latency(latency.resource_selection);
        let d_alloc = engine.draw_latency(latency.resource_allocation);
        let d_dispatch = engine.draw_latency(latency.job_dispatch);
        self.charge(Stage::ResourceIdentification, d_ident);
        self.charge(Stage::ResourceSelection, d_select);
        self.charge(Stage::ResourceAllocation, d_alloc);
        self.charge(Stage::JobDispatch, d_dispatch);

        let kind = match self.policy.family {
            Family::MonolithicBatch => "scheduling-cycle",
            Family::TwoLevelOffer => "offer-round",
            Family::HeartbeatMapreduce => "heartbeat",
        };
        self.transition(
            engine,
            kind,
            g,
            TaskState::Dispatching,
            Some(Stage::ResourceIdentification),
            d_ident,
        );
        self.trace_charge(engine, kind, None, Some(g), Stage::ResourceSelection, d_select);
        self.trace_charge(engine, kind, None, Some(g), Stage::ResourceAllocation, d_alloc);

        // Heartbeat containers take one full round trip to come back
        // allocated before dispatch can begin.
        let allocation_delay = match self.policy.family {
            Family::HeartbeatMapreduce => self.policy.heartbeat_interval,
            _ => Micros::ZERO,
        };
        let entry = now + d_ident + d_select + d_alloc + allocation_delay;
        let start = self.pipeline.start_for(entry, d_dispatch);
        self.tasks[g].pending_stage_latency = d_dispatch;
        self.tasks[g].proj_release = start
            + d_dispatch
            + self.tasks[g].duration
            + self.policy.latency.job_termination.base;
        engine.post(start + d_dispatch, EventKind::DispatchComplete { task: self.task_ref(g) })?;
        Ok(())
    }
}

/// Working slot set for one scheduling pass.
enum Scope {
    /// The whole cluster (monolithic).
    Cluster,
    /// An explicit offer (two-level); accepted slots are consumed.
    Offered(Vec<(u32, u32)>),
}

impl Scope {
    fn consume(&mut self, taken: &[(u32, u32)]) {
        if let Scope::Offered(offered) = self {
            offered.retain(|s| !taken.contains(s));
        }
    }
}

impl Handler for World<'_> {
    type Error = SimError;

    fn on_event(&mut self, engine: &mut Engine<'_>, event: Event) -> Result<(), SimError> {
        match event.kind {
            EventKind::Submit { array } => self.on_submit(engine, array),
            EventKind::QueueReady { array } => self.on_queue_ready(engine, array),
            EventKind::SchedulingCycle => self.on_scheduling_cycle(engine),
            EventKind::OfferRound => self.on_offer_round(engine),
            EventKind::Heartbeat { node } => self.on_heartbeat(engine, node),
            EventKind::DispatchComplete { task } => self.on_dispatch_complete(engine, task),
            EventKind::TaskComplete { task } => self.on_run_finished(engine, task, false),
            EventKind::FailureInjected { task } => self.on_run_finished(engine, task, true),
            EventKind::TerminationComplete { task } => self.on_termination_complete(engine, task),
        }
    }
}

/// Runs one trial to idle and hands the sink back (so collected traces or
/// stream targets survive the run).
pub fn simulate_with_sink<'s>(
    setup: &TrialSetup<'_>,
    seed: u64,
    sink: TraceSink<'s>,
) -> Result<(SimOutcome, TraceSink<'s>), SimError> {
    let mut world = World::new(setup)?;
    let mut engine = Engine::with_sink(seed, sink);
    world.prime(&mut engine, setup.workload)?;
    engine.run_until_idle(&mut world)?;
    if let Some(task) = world.failed_task() {
        return Err(SimError::RestartsExhausted { task, at: world.last_termination });
    }
    let outcome = world.outcome(engine.events_executed());
    Ok((outcome, engine.into_sink()))
}

/// [`simulate_with_sink`] without trace recording.
pub fn simulate(setup: &TrialSetup<'_>, seed: u64) -> Result<SimOutcome, SimError> {
    simulate_with_sink(setup, seed, TraceSink::Null).map(|(outcome, _)| outcome)
}
