//! Run configuration: a TOML file that fully determines an experiment.
//!
//! All durations in config files are integer microseconds except where a
//! field name says otherwise; the CLI exposes second-denominated flags and
//! converts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{ExperimentPlan, DEFAULT_SLOTS_PER_NODE};
use crate::model::{derive_parameter_set, ModelError, ParameterSet, RunMode};
use crate::multilevel::BundleFactor;
use crate::policy::{presets, PolicyError, PolicyPreset};
use crate::time::Micros;

/// A positive rational, accepted as `"3"`, `"1/22"` or `"0.5"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScaleFactor {
    num: u64,
    den: u64,
}

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<ScaleFactor, ConfigError> {
        if num == 0 || den == 0 {
            return Err(ConfigError::BadScale("scale must be positive".to_string()));
        }
        let g = gcd(num, den);
        Ok(ScaleFactor { num: num / g, den: den / g })
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    /// Rescaled processor count, rounded half up, floored at 1.
    pub fn apply(self, processors: u32) -> u32 {
        let scaled =
            (processors as u128 * self.num as u128 + self.den as u128 / 2) / self.den as u128;
        (scaled.max(1)).min(u32::MAX as u128) as u32
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for ScaleFactor {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<ScaleFactor, ConfigError> {
        let bad = || ConfigError::BadScale(format!("cannot parse scale '{s}'"));
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num: u64 = a.trim().parse().map_err(|_| bad())?;
            let den: u64 = b.trim().parse().map_err(|_| bad())?;
            return ScaleFactor::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 12 || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac_val: u64 = frac.parse().map_err(|_| bad())?;
            let den = 10u64.pow(frac.len() as u32);
            return ScaleFactor::new(int * den + frac_val, den);
        }
        let num: u64 = s.parse().map_err(|_| bad())?;
        ScaleFactor::new(num, 1)
    }
}

impl TryFrom<String> for ScaleFactor {
    type Error = ConfigError;
    fn try_from(s: String) -> Result<ScaleFactor, ConfigError> {
        s.parse()
    }
}

impl From<ScaleFactor> for String {
    fn from(s: ScaleFactor) -> String {
        s.to_string()
    }
}

/// One parameter set given by its free parameters; `n` and `N` are derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSetConfig {
    pub processors: u32,
    pub job_time_per_processor: Micros,
    pub task_time: Micros,
    pub trials: u32,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parameter_sets[{index}]: {source}")]
    BadSet { index: usize, source: ModelError },
    #[error("{0}")]
    BadScale(String),
    #[error("policy '{0}' is neither a preset nor defined in custom_policies")]
    UnknownPolicy(String),
    #[error("custom policy '{name}': {source}")]
    BadPolicy { name: String, source: PolicyError },
    #[error("parameter-set selection: {0}")]
    BadSelection(String),
    #[error("modes must not be empty")]
    NoModes,
    #[error("policies must not be empty")]
    NoPolicies,
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Io(String),
}

/// The whole experiment configuration. The default value reproduces the
/// reference plan: four parameter sets at P=1408 and T_job=240 s with task
/// times of 1, 5, 30 and 60 s, three trials each, all four presets, both
/// modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub policies: Vec<String>,
    pub modes: Vec<RunMode>,
    pub scale: ScaleFactor,
    pub bundle_factor: BundleFactor,
    pub intra_bundle_overhead: Micros,
    /// Overrides every set's trial count when present.
    pub trials: Option<u32>,
    pub output_dir: PathBuf,
    pub trace: bool,
    /// Replay every trace through the validity audit (slower).
    pub audit: bool,
    /// 0 = one worker per available core.
    pub jobs: usize,
    pub slots_per_node: u32,
    pub parameter_sets: Vec<ParameterSetConfig>,
    pub custom_policies: Vec<PolicyPreset>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        let sets = [1u64, 5, 30, 60]
            .iter()
            .map(|&t| ParameterSetConfig {
                processors: 1408,
                job_time_per_processor: Micros::from_secs(240),
                task_time: Micros::from_secs(t),
                trials: 3,
            })
            .collect();
        RunConfig {
            seed: 42,
            policies: presets().into_iter().map(|p| p.name).collect(),
            modes: vec![RunMode::Direct, RunMode::Multilevel],
            scale: ScaleFactor::ONE,
            bundle_factor: BundleFactor::PER_PROCESSOR,
            intra_bundle_overhead: Micros::ZERO,
            trials: None,
            output_dir: PathBuf::from("out"),
            trace: false,
            audit: false,
            jobs: 0,
            slots_per_node: DEFAULT_SLOTS_PER_NODE,
            parameter_sets: sets,
            custom_policies: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Preset catalogue for this config: custom policies first (they may
    /// shadow a preset name), then the built-ins.
    pub fn available_policies(&self) -> Vec<PolicyPreset> {
        let mut all = self.custom_policies.clone();
        for p in presets() {
            if !all.iter().any(|c| c.name == p.name) {
                all.push(p);
            }
        }
        all
    }

    fn resolve_policy(&self, name: &str) -> Result<PolicyPreset, ConfigError> {
        let preset = self
            .available_policies()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| ConfigError::UnknownPolicy(name.to_string()))?;
        preset.config.validate().map_err(|source| ConfigError::BadPolicy {
            name: name.to_string(),
            source,
        })?;
        Ok(preset)
    }

    /// Scaled, derived, validated parameter sets.
    pub fn resolved_sets(&self) -> Result<Vec<ParameterSet>, ConfigError> {
        self.parameter_sets
            .iter()
            .enumerate()
            .map(|(index, s)| {
                let set = derive_parameter_set(
                    s.processors,
                    s.job_time_per_processor,
                    s.task_time,
                    self.trials.unwrap_or(s.trials),
                )
                .map_err(|source| ConfigError::BadSet { index, source })?;
                Ok(set.with_processors(self.scale.apply(set.processors)))
            })
            .collect()
    }

    pub fn to_plan(&self) -> Result<ExperimentPlan, ConfigError> {
        if self.modes.is_empty() {
            return Err(ConfigError::NoModes);
        }
        if self.policies.is_empty() {
            return Err(ConfigError::NoPolicies);
        }
        let policies = self
            .policies
            .iter()
            .map(|name| self.resolve_policy(name))
            .collect::<Result<Vec<_>, _>>()?;
        let jobs = if self.jobs == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.jobs
        };
        Ok(ExperimentPlan {
            sets: self.resolved_sets()?,
            policies,
            modes: self.modes.clone(),
            base_seed: self.seed,
            bundle_factor: self.bundle_factor,
            intra_bundle_overhead: self.intra_bundle_overhead,
            preferred_slots_per_node: self.slots_per_node,
            jobs,
            audit: self.audit,
            trace_dir: if self.trace { Some(self.output_dir.clone()) } else { None },
        })
    }

    /// Keeps only the parameter sets at the given 1-based positions.
    pub fn select_sets(&mut self, selection: &[usize]) -> Result<(), ConfigError> {
        let mut picked = Vec::new();
        for &i in selection {
            if i == 0 || i > self.parameter_sets.len() {
                return Err(ConfigError::BadSelection(format!(
                    "set {i} out of range 1..={}",
                    self.parameter_sets.len()
                )));
            }
            picked.push(self.parameter_sets[i - 1].clone());
        }
        self.parameter_sets = picked;
        Ok(())
    }
}

/// Dynamic resources for a custom cluster spec default.
pub fn default_dynamic_resources() -> BTreeMap<String, u64> {
    BTreeMap::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_is_the_reference_plan() {
        let plan = RunConfig::default().to_plan().unwrap();
        assert_eq!(plan.sets.len(), 4);
        assert_eq!(plan.policies.len(), 4);
        assert_eq!(plan.modes.len(), 2);
        assert_eq!(plan.trial_count(), 96);
        let n: Vec<u32> = plan.sets.iter().map(|s| s.tasks_per_processor).collect();
        assert_eq!(n, vec![240, 48, 8, 4]);
        let big: Vec<u64> = plan.sets.iter().map(|s| s.total_tasks).collect();
        assert_eq!(big, vec![337_920, 67_584, 11_264, 5_632]);
    }

    #[test]
    fn single_policy_single_mode_plan_is_twelve_trials() {
        let mut config = RunConfig::default();
        config.policies = vec!["slurm-like".to_string()];
        config.modes = vec![RunMode::Direct];
        let plan = config.to_plan().unwrap();
        assert_eq!(plan.cell_count(), 4);
        assert_eq!(plan.trial_count(), 12);
    }

    #[test]
    fn config_round_trip_is_a_fixed_point() {
        let config = RunConfig::default();
        let text = config.to_toml();
        let parsed = RunConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, config);
        assert_eq!(parsed.to_toml(), text);
    }

    #[test]
    fn scale_parses_rationals_and_decimals() {
        assert_eq!("1/22".parse::<ScaleFactor>().unwrap(), ScaleFactor::new(1, 22).unwrap());
        assert_eq!("0.5".parse::<ScaleFactor>().unwrap(), ScaleFactor::new(1, 2).unwrap());
        assert_eq!("2".parse::<ScaleFactor>().unwrap(), ScaleFactor::new(2, 1).unwrap());
        assert_eq!("2/4".parse::<ScaleFactor>().unwrap().to_string(), "1/2");
        assert!("0".parse::<ScaleFactor>().is_err());
        assert!("-1".parse::<ScaleFactor>().is_err());
        assert!("x/y".parse::<ScaleFactor>().is_err());
    }

    #[test]
    fn scaling_rescales_p_and_n() {
        let mut config = RunConfig::default();
        config.scale = "0.5".parse().unwrap();
        let sets = config.resolved_sets().unwrap();
        assert_eq!(sets[0].processors, 704);
        assert_eq!(sets[0].total_tasks, 168_960);
        config.scale = "1/22".parse().unwrap();
        let sets = config.resolved_sets().unwrap();
        assert_eq!(sets[0].processors, 64);
        assert_eq!(sets[0].tasks_per_processor, 240);
    }

    #[test]
    fn invalid_set_is_rejected_with_its_index() {
        let mut config = RunConfig::default();
        config.parameter_sets[2].task_time = Micros::from_secs(7);
        let err = config.resolved_sets().unwrap_err();
        assert!(err.to_string().contains("parameter_sets[2]"), "{err}");
    }

    #[test]
    fn unknown_policy_is_rejected_by_name() {
        let mut config = RunConfig::default();
        config.policies = vec!["slurm-like".to_string(), "windows-scheduler".to_string()];
        let err = config.to_plan().unwrap_err();
        assert!(err.to_string().contains("windows-scheduler"));
    }

    #[test]
    fn custom_policies_shadow_presets() {
        let mut config = RunConfig::default();
        let mut custom = presets().remove(0);
        custom.name = "slurm-like".to_string();
        custom.config.cycle_period = Micros::from_millis(7);
        config.custom_policies = vec![custom.clone()];
        config.policies = vec!["slurm-like".to_string()];
        let plan = config.to_plan().unwrap();
        assert_eq!(plan.policies[0].config.cycle_period, Micros::from_millis(7));
    }

    #[test]
    fn set_selection_is_one_based() {
        let mut config = RunConfig::default();
        config.select_sets(&[4, 1]).unwrap();
        assert_eq!(config.parameter_sets.len(), 2);
        assert_eq!(config.parameter_sets[0].task_time, Micros::from_secs(60));
        assert!(RunConfig::default().select_sets(&[5]).is_err());
    }
}
