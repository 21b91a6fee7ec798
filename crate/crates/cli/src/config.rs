//! TOML run configurations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cvlearn_core::learner::{BoundParams, BoundSetting, LearnRunConfig, SampleDistribution, TaskConfig, TaskSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::specs::{CircuitSpec, StateSpec};
use crate::sweep::SweepConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Prob,
    LearnState,
    LearnTask,
    Bound,
    Dims,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem for every output of the run.
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_stem() -> String {
    "result".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnStateSection {
    pub target: StateSpec,
    /// Hypothesis class; Gaussian states on the target's modes.
    #[serde(default)]
    pub run: LearnRunConfig,
    #[serde(default)]
    pub probes: SampleDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnTaskSection {
    pub task: TaskSpec,
    #[serde(default)]
    pub run: TaskConfig,
    /// Grid points per axis for the single-mode exhaustive comparison; 0 skips it.
    #[serde(default)]
    pub grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub setting: BoundSetting,
    #[serde(default)]
    pub params: BoundParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSection {
    pub class: String,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_kmax")]
    pub k_max: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn one() -> usize {
    1
}
fn default_gamma() -> f64 {
    0.1
}
fn default_kmax() -> usize {
    6
}
fn default_budget() -> usize {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output: OutputConfig,
    /// Worker threads; `CVLEARN_THREADS` wins when set.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub prob: Option<CircuitSpec>,
    #[serde(default)]
    pub learn_state: Option<LearnStateSection>,
    #[serde(default)]
    pub learn_task: Option<LearnTaskSection>,
    #[serde(default)]
    pub bound: Option<BoundSection>,
    #[serde(default)]
    pub dims: Option<DimsSection>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        let present = [
            (ExperimentKind::Prob, self.prob.is_some()),
            (ExperimentKind::LearnState, self.learn_state.is_some()),
            (ExperimentKind::LearnTask, self.learn_task.is_some()),
            (ExperimentKind::Bound, self.bound.is_some()),
            (ExperimentKind::Dims, self.dims.is_some()),
            (ExperimentKind::Sweep, self.sweep.is_some()),
        ];
        for (kind, has) in present {
            if kind == self.experiment && !has {
                bail!("experiment {:?} needs its section", kind);
            }
            if kind != self.experiment && has {
                bail!("section for {:?} given but experiment is {:?}", kind, self.experiment);
            }
        }
        if let Some(s) = &self.sweep {
            let mut s = s.clone();
            s.seeds = self.seeds.clone();
            s.validate()?;
        }
        if let Some(t) = &self.learn_task {
            t.task.validate()?;
        }
        Ok(())
    }

    /// Canonical JSON of the parsed config; the hash input.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
