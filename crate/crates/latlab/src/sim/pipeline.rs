//! The dispatch pipeline: a bank of `dispatch_concurrency` servers that
//! launches pass through one service time apiece, in hand-off order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::policy::Limit;
use crate::time::Micros;

pub struct DispatchPipeline {
    concurrency: Limit,
    /// Times at which each tracked server next becomes free.
    servers: BinaryHeap<Reverse<Micros>>,
}

impl DispatchPipeline {
    pub fn new(concurrency: Limit) -> DispatchPipeline {
        DispatchPipeline { concurrency, servers: BinaryHeap::new() }
    }

    /// Commits one dispatch arriving at `entry` with service time `service`;
    /// returns when service starts.
    pub fn start_for(&mut self, entry: Micros, service: Micros) -> Micros {
        match self.concurrency.count() {
            None => entry,
            Some(c) => {
                let free = if (self.servers.len() as u32) < c {
                    Micros::ZERO
                } else {
                    self.servers.pop().unwrap().0
                };
                let start = entry.max(free);
                self.servers.push(Reverse(start + service));
                start
            }
        }
    }

    /// When a dispatch arriving at `entry` would start, without committing.
    pub fn peek_start(&self, entry: Micros) -> Micros {
        match self.concurrency.count() {
            None => entry,
            Some(c) => {
                if (self.servers.len() as u32) < c {
                    entry
                } else {
                    entry.max(self.servers.peek().unwrap().0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialized_pipeline_spaces_out_same_instant_arrivals() {
        let mut p = DispatchPipeline::new(Limit::Count(1));
        let s = Micros::from_secs(1);
        assert_eq!(p.start_for(Micros::ZERO, s), Micros::ZERO);
        assert_eq!(p.start_for(Micros::ZERO, s), Micros::from_secs(1));
        assert_eq!(p.start_for(Micros::ZERO, s), Micros::from_secs(2));
    }

    #[test]
    fn wide_pipeline_batches() {
        let mut p = DispatchPipeline::new(Limit::Count(8));
        let service = Micros::from_millis(10);
        let mut last = Micros::ZERO;
        for _ in 0..1408 {
            last = p.start_for(Micros::ZERO, service) + service;
        }
        // 1408/8 waves of 10 ms each
        assert_eq!(last, Micros::from_millis(1760));
    }

    #[test]
    fn unlimited_pipeline_never_queues() {
        let mut p = DispatchPipeline::new(Limit::UNLIMITED);
        for i in 0..100u64 {
            assert_eq!(p.start_for(Micros(i), Micros::from_secs(5)), Micros(i));
        }
    }

    #[test]
    fn idle_servers_resume_immediately() {
        let mut p = DispatchPipeline::new(Limit::Count(1));
        let s = Micros::from_secs(1);
        assert_eq!(p.start_for(Micros::ZERO, s), Micros::ZERO);
        // Arrives long after the server went idle.
        assert_eq!(p.start_for(Micros::from_secs(11), s), Micros::from_secs(11));
        assert_eq!(p.peek_start(Micros::from_secs(11)), Micros::from_secs(12));
    }
}
