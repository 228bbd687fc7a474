//! Per-trial measurement record.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::{ParameterSet, Stage};
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    /// One launch per task.
    Direct,
    /// Tasks bundled into fewer, longer launches.
    Multilevel,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Direct => "direct",
            RunMode::Multilevel => "multilevel",
        }
    }
}

/// Virtual time attributed to each of the seven stages over a whole trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTotals(pub [Micros; 7]);

impl StageTotals {
    pub fn charge(&mut self, stage: Stage, amount: Micros) {
        self.0[stage.index()] += amount;
    }

    pub fn total(&self) -> Micros {
        self.0.iter().copied().sum()
    }
}

impl Index<Stage> for StageTotals {
    type Output = Micros;
    fn index(&self, stage: Stage) -> &Micros {
        &self.0[stage.index()]
    }
}

impl IndexMut<Stage> for StageTotals {
    fn index_mut(&mut self, stage: Stage) -> &mut Micros {
        &mut self.0[stage.index()]
    }
}

/// Everything measured in one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub policy: String,
    pub mode: RunMode,
    pub params: ParameterSet,
    pub seed: u64,
    /// First submission to the last task's termination completing.
    pub t_total: Micros,
    /// `T_job / T_total`.
    pub utilization: f64,
    /// Dispatch operations performed.
    pub launches: u64,
    pub stage_totals: StageTotals,
    pub tasks_completed: u64,
    pub tasks_restarted: u64,
    /// Wall-clock run time; diagnostic only, never serialized into reports.
    #[serde(skip)]
    pub wall_ms: u64,
}
