//! Independent makespan predictor for the serialized-dispatch regime.
//!
//! Domain: a single dispatch pipeline (concurrency 1), zero scheduling
//! interval, zero latency in every stage except a fixed per-launch dispatch
//! overhead, homogeneous launch durations. Under those conditions the
//! simulator must agree with this model exactly.
//!
//! Derivation: launches leave the queue in FIFO order. Launch `k` can start
//! dispatching once (a) the dispatcher has finished launch `k-1` and (b) a
//! slot is free. Dispatch holds the slot for `overhead`, then the launch
//! runs `duration` and the slot frees instantly. Rather than solving the
//! recurrence s_k = max(s_{k-1} + o, a_k) in closed form, the timeline is
//! constructed greedily slot by slot, which is an independent,
//! non-event-queue implementation of the same physics.

use crate::time::Micros;

/// Predicted total time for `launches` homogeneous launches of `duration`
/// each, dispatched one at a time with `overhead` apiece onto `processors`
/// slots.
pub fn serialized_dispatch_makespan(
    processors: u32,
    launches: u64,
    duration: Micros,
    overhead: Micros,
) -> Micros {
    assert!(processors > 0, "need at least one slot");
    if launches == 0 {
        return Micros::ZERO;
    }
    // slot_free[i]: when slot i can accept its next launch.
    let mut slot_free = vec![Micros::ZERO; processors as usize];
    let mut dispatcher_free = Micros::ZERO;
    let mut makespan = Micros::ZERO;
    for _ in 0..launches {
        // Earliest-available slot, lowest index on ties.
        let slot = slot_free
            .iter()
            .enumerate()
            .min_by_key(|(i, t)| (**t, *i))
            .map(|(i, _)| i)
            .unwrap();
        let start = slot_free[slot].max(dispatcher_free);
        let running = start + overhead;
        let finished = running + duration;
        dispatcher_free = running;
        slot_free[slot] = finished;
        makespan = makespan.max(finished);
    }
    makespan
}
