//! latlab: a deterministic discrete-event simulator of cluster job
//! schedulers, plus a benchmark harness measuring how launch latency
//! erodes utilization for short tasks and how task bundling restores it.

pub mod audit;
pub mod bench;
pub mod config;
pub mod engine;
pub mod model;
pub mod multilevel;
pub mod policy;
pub mod sim;
pub mod time;

pub use time::Micros;
