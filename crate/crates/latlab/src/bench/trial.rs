//! Single-trial execution: workload construction, simulation, benchmark math.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::audit::{Audit, AuditReport};
use crate::engine::{TraceEntry, TraceSink};
use crate::model::{
    utilization, ArrayId, ClusterSpec, JobArray, ModelError, ParameterSet, RunMode, TrialResult,
};
use crate::multilevel::{self, BundleFactor, MultilevelError};
use crate::policy::PolicyConfig;
use crate::sim::{simulate_with_sink, SimError, TrialSetup};
use crate::time::Micros;

/// Node width used when a plan does not pin the cluster shape.
pub const DEFAULT_SLOTS_PER_NODE: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrialError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Multilevel(#[from] MultilevelError),
    #[error("trace dump: {0}")]
    TraceDump(String),
}

impl TrialError {
    /// Accounting bugs that must abort the whole run rather than just
    /// failing a cell.
    pub fn is_engine_abort(&self) -> bool {
        matches!(
            self,
            TrialError::Sim(SimError::Engine(_))
                | TrialError::Sim(SimError::SlotOccupied { .. })
                | TrialError::Model(ModelError::TotalBelowBound { .. })
        )
    }
}

/// What to record while a trial runs.
#[derive(Debug, Clone, Default)]
pub struct TrialOptions {
    /// Replay the trace stream through the validity audit.
    pub audit: bool,
    /// Stream the trace as tab-separated lines to this file.
    pub trace_path: Option<PathBuf>,
}

/// Everything needed to run one (policy, parameter set, mode) trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub policy_name: String,
    pub policy: PolicyConfig,
    pub params: ParameterSet,
    pub mode: RunMode,
    pub bundle_factor: BundleFactor,
    pub intra_bundle_overhead: Micros,
    pub preferred_slots_per_node: u32,
}

impl TrialSpec {
    pub fn cluster(&self) -> ClusterSpec {
        ClusterSpec::for_processors(
            self.params.processors,
            self.preferred_slots_per_node,
            Default::default(),
        )
        .with_default_memory()
    }

    /// The submitted workload: one array of `N` sleep-equivalent tasks of
    /// duration `t` at time zero, bundled first in multilevel mode.
    pub fn workload(&self) -> Result<Vec<JobArray>, MultilevelError> {
        let base = JobArray::uniform(
            ArrayId(0),
            self.params.total_tasks as u32,
            self.params.task_time,
        );
        match self.mode {
            RunMode::Direct => Ok(vec![base]),
            RunMode::Multilevel => {
                let b = self.bundle_factor.resolve(self.params.tasks_per_processor);
                Ok(vec![multilevel::bundle(&base, b, self.intra_bundle_overhead)?])
            }
        }
    }
}

/// A finished trial plus its audit, when one was requested.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub result: TrialResult,
    pub audit: Option<AuditReport>,
}

/// Runs one trial to completion. With `options.audit` set, the full trace
/// stream is replayed incrementally through the state-machine/capacity
/// validator and payload conservation is checked against `N * t`.
pub fn run_trial(spec: &TrialSpec, seed: u64, options: &TrialOptions) -> Result<TrialRun, TrialError> {
    let started = Instant::now();
    let cluster = spec.cluster();
    let workload = spec.workload()?;
    let setup = TrialSetup {
        cluster: &cluster,
        policy: &spec.policy,
        workload: &workload,
        failures: &[],
    };

    let mut dump = match &options.trace_path {
        Some(path) => Some(BufWriter::new(
            File::create(path).map_err(|e| TrialError::TraceDump(format!("{path:?}: {e}")))?,
        )),
        None => None,
    };
    let mut auditor = options
        .audit
        .then(|| Audit::new(&workload, &cluster, spec.policy.task_memory));
    let outcome = if dump.is_some() || auditor.is_some() {
        let mut observe = |e: &TraceEntry| {
            if let Some(a) = auditor.as_mut() {
                a.observe(e);
            }
            if let Some(w) = dump.as_mut() {
                e.write_tsv(w).expect("trace dump write failed");
            }
        };
        let (outcome, sink) = simulate_with_sink(&setup, seed, TraceSink::Observer(&mut observe))?;
        drop(sink);
        outcome
    } else {
        simulate_with_sink(&setup, seed, TraceSink::Null)?.0
    };

    let audit_report = auditor.map(|a| {
        let mut report = a.finish();
        let expected = Micros(spec.params.total_tasks * spec.params.task_time.0);
        if !report.conserves(expected) {
            report.violations.push(format!(
                "payload not conserved: completed {} of {}",
                report.payload_completed.0, expected.0
            ));
        }
        report
    });

    let u = utilization(spec.params.job_time_per_processor, outcome.t_total)?;
    Ok(TrialRun {
        result: TrialResult {
            policy: spec.policy_name.clone(),
            mode: spec.mode,
            params: spec.params.clone(),
            seed,
            t_total: outcome.t_total,
            utilization: u,
            launches: outcome.launches,
            stage_totals: outcome.stage_totals,
            tasks_completed: outcome.tasks_completed,
            tasks_restarted: outcome.tasks_restarted,
            wall_ms: started.elapsed().as_millis() as u64,
        },
        audit: audit_report,
    })
}
