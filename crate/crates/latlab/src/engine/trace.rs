//! Trace recording.
//!
//! Every state transition and latency charge flows through a [`TraceSink`].
//! Full collection is only practical for small runs; large runs audit the
//! stream incrementally instead of storing it.

use std::io::{self, Write};

use crate::model::{ArrayId, NodeId, Stage, TaskRef, TaskState};
use crate::time::Micros;

/// One observed trace record. `before`/`after` are set when the record is a
/// state transition; `stage`/`latency` when virtual time was charged.
/// `slots` carries the slot reservation on the transition into
/// `Dispatching` so capacity can be audited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub time: Micros,
    pub kind: &'static str,
    pub array: Option<ArrayId>,
    pub task: Option<TaskRef>,
    pub before: Option<TaskState>,
    pub after: Option<TaskState>,
    pub stage: Option<Stage>,
    pub latency: Micros,
    pub slots: Vec<(NodeId, u32)>,
}

impl TraceEntry {
    /// Tab-separated dump line:
    /// `time_us, kind, array_id, task_index, state_before, state_after, stage, latency_us`.
    pub fn write_tsv(&self, out: &mut impl Write) -> io::Result<()> {
        let array = self
            .task
            .map(|t| t.array)
            .or(self.array)
            .map(|a| a.0.to_string())
            .unwrap_or_else(|| "-".to_string());
        let index = self.task.map(|t| t.index.to_string()).unwrap_or_else(|| "-".to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.time.0,
            self.kind,
            array,
            index,
            self.before.map(|s| s.name()).unwrap_or("-"),
            self.after.map(|s| s.name()).unwrap_or("-"),
            self.stage.map(|s| s.name()).unwrap_or("-"),
            self.latency.0,
        )
    }
}

/// Where trace records go.
pub enum TraceSink<'a> {
    /// Discard everything.
    Null,
    /// Keep the full trace in memory.
    Collect(Vec<TraceEntry>),
    /// Stream tab-separated lines to a writer.
    Tsv(Box<dyn Write + 'a>),
    /// Feed an incremental consumer (the audit) without storing.
    Observer(&'a mut dyn FnMut(&TraceEntry)),
}

impl TraceSink<'_> {
    pub fn record(&mut self, entry: TraceEntry) {
        match self {
            TraceSink::Null => {}
            TraceSink::Collect(entries) => entries.push(entry),
            TraceSink::Tsv(out) => {
                entry.write_tsv(out).expect("trace dump write failed");
            }
            TraceSink::Observer(f) => f(&entry),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, TraceSink::Null)
    }

    pub fn into_entries(self) -> Vec<TraceEntry> {
        match self {
            TraceSink::Collect(entries) => entries,
            _ => Vec::new(),
        }
    }
}
