//! Deterministic discrete-event core: virtual clock, event queue, seeded
//! randomness, trace recording.
//!
//! One engine instance drives one trial and is strictly single-threaded;
//! concurrent trials each own their engine.

mod rng;
mod trace;

pub use rng::{mix_seed, SplitMix64};
pub use trace::{TraceEntry, TraceSink};

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::model::{ArrayId, NodeId, StageLatency, TaskRef};
use crate::time::Micros;

/// What happens at a point in virtual time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// An array arrives at the scheduler.
    Submit { array: ArrayId },
    /// Submission and queue-management latency have elapsed; the array's
    /// tasks enter the queue.
    QueueReady { array: ArrayId },
    /// Monolithic scheduler pass.
    SchedulingCycle,
    /// Resource-offer round (two-level family).
    OfferRound,
    /// One node's heartbeat (heartbeat family).
    Heartbeat { node: NodeId },
    /// A task's dispatch finished; it starts running.
    DispatchComplete { task: TaskRef },
    /// A task ran to successful completion.
    TaskComplete { task: TaskRef },
    /// A task's run ended in an injected failure.
    FailureInjected { task: TaskRef },
    /// Termination stage finished; slots are released.
    TerminationComplete { task: TaskRef },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Submit { .. } => "submit",
            EventKind::QueueReady { .. } => "queue-ready",
            EventKind::SchedulingCycle => "scheduling-cycle",
            EventKind::OfferRound => "offer-round",
            EventKind::Heartbeat { .. } => "heartbeat",
            EventKind::DispatchComplete { .. } => "dispatch-complete",
            EventKind::TaskComplete { .. } => "task-complete",
            EventKind::FailureInjected { .. } => "failure-injected",
            EventKind::TerminationComplete { .. } => "termination-complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Micros,
    /// Insertion counter; ties on `time` execute in posting order, so
    /// zero-delay events run after already-queued same-time events.
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("event {kind} posted at {at} which is before the clock {clock}: policy bug")]
    EventInPast { kind: &'static str, at: Micros, clock: Micros },
}

/// Receives each event in (time, seq) order. All mutation of simulation
/// state flows through the engine handle passed back in.
pub trait Handler {
    type Error: From<EngineError>;
    fn on_event(&mut self, engine: &mut Engine<'_>, event: Event) -> Result<(), Self::Error>;
}

/// Virtual clock + event queue + seeded RNG + trace sink.
pub struct Engine<'a> {
    clock: Micros,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    rng: SplitMix64,
    sink: TraceSink<'a>,
    executed: u64,
}

impl<'a> Engine<'a> {
    pub fn new(seed: u64) -> Engine<'a> {
        Engine::with_sink(seed, TraceSink::Null)
    }

    pub fn with_sink(seed: u64, sink: TraceSink<'a>) -> Engine<'a> {
        Engine {
            clock: Micros::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            rng: SplitMix64::new(seed),
            sink,
            executed: 0,
        }
    }

    pub fn now(&self) -> Micros {
        self.clock
    }

    pub fn events_executed(&self) -> u64 {
        self.executed
    }

    /// Schedules `kind` at absolute time `at`. Posting into the past is a
    /// policy bug and aborts the run.
    pub fn post(&mut self, at: Micros, kind: EventKind) -> Result<(), EngineError> {
        if at < self.clock {
            return Err(EngineError::EventInPast { kind: kind.name(), at, clock: self.clock });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Event { time: at, seq, kind }));
        Ok(())
    }

    /// Uniform draw from `[base - jitter, base + jitter]`, clamped at zero.
    /// Profile validation keeps `jitter <= base`, so the clamp is a
    /// belt-and-braces saturation.
    pub fn draw_latency(&mut self, dist: StageLatency) -> Micros {
        if dist.jitter.is_zero() {
            return dist.base;
        }
        let span = 2 * dist.jitter.0 + 1;
        let offset = self.rng.next_below(span);
        Micros((dist.base.0 + offset).saturating_sub(dist.jitter.0))
    }

    pub fn rng(&mut self) -> &mut SplitMix64 {
        &mut self.rng
    }

    pub fn trace(&mut self, entry: TraceEntry) {
        self.sink.record(entry);
    }

    pub fn tracing_enabled(&self) -> bool {
        !self.sink.is_null()
    }

    pub fn into_sink(self) -> TraceSink<'a> {
        self.sink
    }

    /// Executes events until the queue drains. The clock ends at the last
    /// executed event's time.
    pub fn run_until_idle<H: Handler>(&mut self, handler: &mut H) -> Result<(), H::Error> {
        while let Some(Reverse(event)) = self.queue.pop() {
            debug_assert!(event.time >= self.clock, "queue yielded a past event");
            self.clock = event.time;
            self.executed += 1;
            handler.on_event(self, event)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Recorder {
        seen: Vec<(Micros, ArrayId)>,
    }

    impl Handler for Recorder {
        type Error = EngineError;
        fn on_event(&mut self, engine: &mut Engine<'_>, event: Event) -> Result<(), EngineError> {
            if let EventKind::Submit { array } = event.kind {
                self.seen.push((engine.now(), array));
            }
            Ok(())
        }
    }

    fn submit(id: u32) -> EventKind {
        EventKind::Submit { array: ArrayId(id) }
    }

    #[test]
    fn events_execute_in_time_then_seq_order() {
        let mut engine = Engine::new(0);
        engine.post(Micros(5), submit(1)).unwrap(); // A
        engine.post(Micros(3), submit(2)).unwrap(); // B
        engine.post(Micros(5), submit(3)).unwrap(); // C, same time as A, later seq
        let mut rec = Recorder { seen: Vec::new() };
        engine.run_until_idle(&mut rec).unwrap();
        let order: Vec<u32> = rec.seen.iter().map(|(_, a)| a.0).collect();
        assert_eq!(order, vec![2, 1, 3]);
        assert_eq!(engine.now(), Micros(5));
    }

    #[test]
    fn empty_queue_runs_to_nothing_at_clock_zero() {
        let mut engine = Engine::with_sink(0, TraceSink::Collect(Vec::new()));
        let mut rec = Recorder { seen: Vec::new() };
        engine.run_until_idle(&mut rec).unwrap();
        assert_eq!(engine.now(), Micros::ZERO);
        assert_eq!(engine.events_executed(), 0);
        assert!(engine.into_sink().into_entries().is_empty());
    }

    #[test]
    fn posting_into_the_past_aborts() {
        struct BadHandler;
        impl Handler for BadHandler {
            type Error = EngineError;
            fn on_event(
                &mut self,
                engine: &mut Engine<'_>,
                _event: Event,
            ) -> Result<(), EngineError> {
                engine.post(Micros(1), EventKind::SchedulingCycle)?;
                Ok(())
            }
        }
        let mut engine = Engine::new(0);
        engine.post(Micros(10), submit(1)).unwrap();
        let err = engine.run_until_idle(&mut BadHandler).unwrap_err();
        assert!(matches!(err, EngineError::EventInPast { .. }));
    }

    #[test]
    fn zero_delay_events_run_after_queued_same_time_events() {
        struct Chains {
            order: Vec<&'static str>,
        }
        impl Handler for Chains {
            type Error = EngineError;
            fn on_event(
                &mut self,
                engine: &mut Engine<'_>,
                event: Event,
            ) -> Result<(), EngineError> {
                match event.kind {
                    EventKind::Submit { .. } => {
                        self.order.push("submit");
                        // zero delay: same-time follow-up
                        engine.post(engine.now(), EventKind::SchedulingCycle)?;
                    }
                    EventKind::OfferRound => self.order.push("offer"),
                    EventKind::SchedulingCycle => self.order.push("cycle"),
                    _ => {}
                }
                Ok(())
            }
        }
        let mut engine = Engine::new(0);
        engine.post(Micros(5), submit(1)).unwrap();
        engine.post(Micros(5), EventKind::OfferRound).unwrap(); // already queued at same time
        let mut h = Chains { order: Vec::new() };
        engine.run_until_idle(&mut h).unwrap();
        assert_eq!(h.order, vec!["submit", "offer", "cycle"]);
    }

    #[test]
    fn jitter_draws_are_deterministic_per_seed() {
        let dist = StageLatency::new(Micros::from_millis(10), Micros::from_millis(3));
        let draw3 = |seed: u64| {
            let mut e = Engine::new(seed);
            [
                e.draw_latency(dist),
                e.draw_latency(dist),
                e.draw_latency(dist),
            ]
        };
        assert_eq!(draw3(42), draw3(42));
        let a = draw3(42);
        let b = draw3(43);
        assert_ne!(a, b);
        for v in a {
            assert!(v >= Micros::from_millis(7) && v <= Micros::from_millis(13));
        }
    }

    #[test]
    fn zero_jitter_draw_is_the_base() {
        let mut e = Engine::new(9);
        let d = e.draw_latency(StageLatency::fixed(Micros::from_millis(15)));
        assert_eq!(d, Micros::from_millis(15));
    }
}
