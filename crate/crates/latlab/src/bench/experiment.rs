//! Parameter sets x policies x modes x trials, with deterministic seeding
//! and order-independent aggregation.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::mix_seed;
use crate::model::{ParameterSet, RunMode, TrialResult};
use crate::multilevel::BundleFactor;
use crate::policy::PolicyPreset;
use crate::time::Micros;

use super::trial::{run_trial, TrialError, TrialOptions, TrialRun, TrialSpec};

/// A fully resolved experiment: every scaling and defaulting decision has
/// already been applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub sets: Vec<ParameterSet>,
    pub policies: Vec<PolicyPreset>,
    pub modes: Vec<RunMode>,
    pub base_seed: u64,
    pub bundle_factor: BundleFactor,
    pub intra_bundle_overhead: Micros,
    pub preferred_slots_per_node: u32,
    /// Worker threads for concurrent trials (1 = serial).
    pub jobs: usize,
    /// Replay every trace through the state-machine/capacity validator.
    pub audit: bool,
    /// Write one tab-separated trace file per trial into this directory.
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn cell_count(&self) -> usize {
        self.policies.len() * self.modes.len() * self.sets.len()
    }

    pub fn trial_count(&self) -> u64 {
        self.policies.len() as u64
            * self.modes.len() as u64
            * self.sets.iter().map(|s| s.trials as u64).sum::<u64>()
    }
}

fn mode_code(mode: RunMode) -> u64 {
    match mode {
        RunMode::Direct => 0,
        RunMode::Multilevel => 1,
    }
}

/// Deterministic per-trial seed, independent of execution order.
pub fn trial_seed(base: u64, policy_idx: usize, set_idx: usize, mode: RunMode, trial: u32) -> u64 {
    mix_seed(&[base, policy_idx as u64, set_idx as u64, mode_code(mode), trial as u64])
}

/// Aggregated measurements for one (policy, mode, parameter set) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub policy: String,
    pub mode: RunMode,
    /// 1-based position of the parameter set in the plan.
    pub set_index: usize,
    pub params: ParameterSet,
    pub trials: Vec<TrialResult>,
    pub mean_utilization: f64,
    pub min_utilization: f64,
    pub max_utilization: f64,
    pub mean_t_total_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Diagnostics when any trial failed; the cell then carries whatever
    /// trials did complete.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// A failure of the accounting-bug class (events in the past, slot
    /// oversubscription, impossible totals) rather than a plain failed run.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub engine_abort: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_violations: Option<Vec<String>>,
}

impl CellReport {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub base_seed: u64,
    pub notes: Vec<String>,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.failed()).count()
    }

    pub fn engine_aborted(&self) -> bool {
        self.cells.iter().any(|c| c.engine_abort)
    }

    pub fn cell(&self, policy: &str, mode: RunMode, set_index: usize) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.policy == policy && c.mode == mode && c.set_index == set_index)
    }
}

/// The calibration disclosure carried by every report.
pub const CALIBRATION_NOTE: &str = "Preset latency profiles are calibrated to reproduce \
     qualitative scheduler behavior; they are not measurements of any installation.";

/// Marks cells with no counterpart in the reference experiment: the
/// heartbeat scheduler on one-second tasks, and any heartbeat multilevel run.
fn cell_note(preset: &PolicyPreset, mode: RunMode, params: &ParameterSet) -> Option<String> {
    use crate::policy::Family;
    if preset.config.family == Family::HeartbeatMapreduce
        && (mode == RunMode::Multilevel || params.task_time == Micros::from_secs(1))
    {
        Some("no reference measurement".to_string())
    } else {
        None
    }
}

/// Runs the whole plan. Failed trials mark their cell failed with
/// diagnostics; every other cell still reports. The report depends only on
/// the plan, never on the scheduling order of the workers.
pub fn run_experiment(plan: &ExperimentPlan) -> ExperimentReport {
    run_experiment_with(plan, |spec, seed, unit| {
        let trace_path = plan.trace_dir.as_ref().map(|dir| {
            dir.join(format!(
                "{}_{}_set{}_trial{}.trace.tsv",
                spec.policy_name,
                spec.mode.name(),
                unit.set + 1,
                unit.trial + 1,
            ))
        });
        run_trial(spec, seed, &TrialOptions { audit: plan.audit, trace_path })
    })
}

/// Position of one trial within the plan.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Unit {
    pub policy: usize,
    pub mode: RunMode,
    pub set: usize,
    pub trial: u32,
}

pub(crate) fn run_experiment_with<F>(plan: &ExperimentPlan, runner: F) -> ExperimentReport
where
    F: Fn(&TrialSpec, u64, Unit) -> Result<TrialRun, TrialError> + Sync,
{
    let mut units = Vec::new();
    for policy in 0..plan.policies.len() {
        for &mode in &plan.modes {
            for (set, params) in plan.sets.iter().enumerate() {
                for trial in 0..params.trials {
                    units.push(Unit { policy, mode, set, trial });
                }
            }
        }
    }

    let run_unit = |unit: &Unit| {
        let preset = &plan.policies[unit.policy];
        let seed = trial_seed(plan.base_seed, unit.policy, unit.set, unit.mode, unit.trial);
        let spec = TrialSpec {
            policy_name: preset.name.clone(),
            policy: preset.config.clone(),
            params: plan.sets[unit.set].clone(),
            mode: unit.mode,
            bundle_factor: plan.bundle_factor,
            intra_bundle_overhead: plan.intra_bundle_overhead,
            preferred_slots_per_node: plan.preferred_slots_per_node,
        };
        (*unit, runner(&spec, seed, *unit))
    };

    type UnitOutcome = (Unit, Result<TrialRun, TrialError>);
    let mut outcomes: Vec<UnitOutcome> = if plan.jobs <= 1 {
        units.iter().map(run_unit).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .expect("worker pool");
        pool.install(|| units.par_iter().map(run_unit).collect())
    };
    // Aggregation order is fixed by the plan, not by completion order.
    outcomes.sort_by_key(|(u, _)| (u.policy, mode_code(u.mode), u.set, u.trial));

    let mut cells = Vec::new();
    for (pi, preset) in plan.policies.iter().enumerate() {
        for &mode in &plan.modes {
            for (si, set) in plan.sets.iter().enumerate() {
                let mut trials = Vec::new();
                let mut errors = Vec::new();
                let mut violations = Vec::new();
                let mut engine_abort = false;
                for (unit, outcome) in &outcomes {
                    if unit.policy != pi || unit.mode != mode || unit.set != si {
                        continue;
                    }
                    match outcome {
                        Ok(run) => {
                            trials.push(run.result.clone());
                            if let Some(audit) = &run.audit {
                                violations.extend(audit.violations.iter().cloned());
                            }
                        }
                        Err(e) => {
                            engine_abort |= e.is_engine_abort();
                            errors.push(format!("trial {}: {e}", unit.trial));
                        }
                    }
                }
                let us: Vec<f64> = trials.iter().map(|t| t.utilization).collect();
                let mean = |xs: &[f64]| {
                    if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 }
                };
                cells.push(CellReport {
                    policy: preset.name.clone(),
                    mode,
                    set_index: si + 1,
                    params: set.clone(),
                    mean_utilization: mean(&us),
                    min_utilization: us.iter().copied().fold(f64::NAN, f64::min),
                    max_utilization: us.iter().copied().fold(f64::NAN, f64::max),
                    mean_t_total_secs: mean(
                        &trials.iter().map(|t| t.t_total.as_secs_f64()).collect::<Vec<_>>(),
                    ),
                    note: cell_note(preset, mode, set),
                    error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
                    engine_abort,
                    audit_violations: if plan.audit { Some(violations) } else { None },
                    trials,
                });
            }
        }
    }

    ExperimentReport {
        base_seed: plan.base_seed,
        notes: vec![CALIBRATION_NOTE.to_string()],
        cells,
    }
}
