//! Command bodies shared by the subcommands and the run-config entry.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use cvlearn_core::dims::{
    fat_shattering_lower_bound, pdim_upper_bound, ClassTag, ConstantClass, FunctionClass, GaussianPhotocountClass,
    GaussianStateClass, GgMovedClass, ShatterConfig, ShatterResult,
};
use cvlearn_core::gg::{validate_gg_effect, validate_gg_state};
use cvlearn_core::learner::{
    draw_training_set, grid_oracle, learn, mean_success, sample_complexity_bound, task_learning_run, BoundParams,
    BoundReport, BoundSetting, HypothesisClass, LearnObject, LearnRun, LearnRunConfig, SampleDistribution, TaskConfig,
    TaskReport, TaskSpec, TrainingSample,
};
use cvlearn_core::symplectic::{validate_channel, validate_effect, validate_state, PSD_TOL};
use serde::{Deserialize, Serialize};

use crate::config::{DimsSection, ExperimentConfig, ExperimentKind};
use crate::specs::CircuitSpec;
use crate::sweep::{run_sweep, scaling_summary, write_csv, ScalingSummary, SweepConfig, SweepRow};
use crate::{thread_count, with_pool, ConfigContext, Failure};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub ok: bool,
    pub details: serde_json::Value,
}

pub fn validate_object(obj: &LearnObject) -> Result<ValidationReport> {
    let (kind, ok, details) = match obj {
        LearnObject::State(s) => {
            let d = validate_state(s, PSD_TOL)?;
            ("state", d.ok, serde_json::to_value(d)?)
        }
        LearnObject::Channel(c) => {
            let d = validate_channel(c, PSD_TOL)?;
            ("channel", d.ok, serde_json::to_value(d)?)
        }
        LearnObject::Effect(e) => {
            let d = validate_effect(e, PSD_TOL)?;
            ("effect", d.ok, serde_json::to_value(d)?)
        }
        LearnObject::GgState(g) => {
            let d = validate_gg_state(g, PSD_TOL)?;
            ("gg-state", d.ok, serde_json::to_value(d)?)
        }
    };
    Ok(ValidationReport { kind: kind.into(), ok, details })
}

/// Validate a serialized GG effect too; `validate` accepts either.
pub fn validate_gg_effect_json(text: &str) -> Option<Result<ValidationReport>> {
    let eff: cvlearn_core::GGEffect = serde_json::from_str(text).ok()?;
    Some(validate_gg_effect(&eff, PSD_TOL).map_err(Into::into).and_then(|d| {
        Ok(ValidationReport { kind: "gg-effect".into(), ok: d.ok, details: serde_json::to_value(d)? })
    }))
}

pub fn sample(target: &LearnObject, dist: &SampleDistribution, t: usize) -> Result<Vec<TrainingSample>> {
    Ok(draw_training_set(target, dist, t)?)
}

pub fn learn_state(target: &LearnObject, dist: &SampleDistribution, cfg: &LearnRunConfig) -> Result<LearnRun> {
    let n = target.n();
    Ok(learn(target, &HypothesisClass::GaussianState { n }, dist, cfg)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub report: TaskReport,
    /// Success of the learned channel averaged over the support of `x`, when finite.
    pub support_success: Option<f64>,
    pub grid_success: Option<f64>,
    pub grid_evaluated: Option<usize>,
}

pub fn learn_task(task: &TaskSpec, cfg: &TaskConfig, grid: usize) -> Result<TaskOutcome> {
    let report = task_learning_run(task, &HypothesisClass::GaussianChannel { n: task.n }, cfg)?;
    let support = task.support_probes().ok();
    let support_success = support.as_ref().map(|p| mean_success(&report.channel, p)).transpose()?;
    let (grid_success, grid_evaluated) = match (&support, grid) {
        (Some(p), g) if g >= 2 => {
            let opt = grid_oracle(task, p, g)?;
            (Some(opt.success), Some(opt.evaluated))
        }
        _ => (None, None),
    };
    Ok(TaskOutcome { report, support_success, grid_success, grid_evaluated })
}

pub fn bound(setting: BoundSetting, params: &BoundParams) -> Result<BoundReport> {
    Ok(sample_complexity_bound(setting, params)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimsSummary {
    pub class: String,
    pub n: usize,
    pub gamma: f64,
    pub k_certified: usize,
    pub bound_value: f64,
}

pub fn function_class(name: &str, n: usize, k: usize) -> Result<Box<dyn FunctionClass>> {
    Ok(match name {
        "f_g" => Box::new(GaussianStateClass { n, displacement_only: false }),
        "f_g_displacement" => Box::new(GaussianStateClass { n, displacement_only: true }),
        "f_gp" if n == 1 => Box::new(GaussianPhotocountClass { cutoff: k.max(1) }),
        "f_gg" if n == 1 => Box::new(GgMovedClass::cat(1.0)?),
        "constant" => Box::new(ConstantClass),
        "f_gp" | "f_gg" => bail!("class {name} is single-mode"),
        other => bail!("unknown class {other:?}; expected f_g, f_g_displacement, f_gp, f_gg or constant"),
    })
}

pub fn dims(sec: &DimsSection, seed: u64) -> Result<(ShatterResult, DimsSummary)> {
    let class = function_class(&sec.class, sec.n, sec.k)?;
    let cfg = ShatterConfig { gamma: sec.gamma, k_max: sec.k_max, budget: sec.budget, seed, ..Default::default() };
    let res = fat_shattering_lower_bound(class.as_ref(), &cfg)?;
    let bound_value = match class.tag() {
        ClassTag::Synthetic => f64::NAN,
        tag => pdim_upper_bound(tag, sec.n, sec.k.max(class.cutoff()).max(1), 0)?,
    };
    let summary = DimsSummary { class: sec.class.clone(), n: sec.n, gamma: sec.gamma, k_certified: res.k_certified, bound_value };
    Ok((res, summary))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub skipped: usize,
    /// Absent when the grid is too small for a fit.
    pub scaling: Option<ScalingSummary>,
    pub scaling_error: Option<String>,
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let out = run_sweep(cfg)?;
    let (scaling, scaling_error) = match scaling_summary(&out.rows, cfg.target_gap, cfg.bootstrap, 0) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(format!("{e:#}"))),
    };
    Ok(SweepResult { rows: out.rows, skipped: out.skipped, scaling, scaling_error })
}

/// Provenance written next to every run-config output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub version: String,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub wall_ms: f64,
    pub metrics: serde_json::Value,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProbRow {
    probability: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SeedMetric {
    seed: u64,
    #[serde(flatten)]
    value: serde_json::Value,
}

/// Paths written by a config run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub artifact: PathBuf,
    pub record: PathBuf,
    pub config_hash: String,
}

/// Execute a TOML run configuration.
pub fn run_config(path: &Path) -> std::result::Result<RunOutcome, Failure> {
    run_loaded(&ExperimentConfig::load(path).config()?)
}

/// Execute an already parsed configuration.
pub fn run_loaded(cfg: &ExperimentConfig) -> std::result::Result<RunOutcome, Failure> {
    cfg.validate().config()?;
    let threads = thread_count(cfg.threads)?;
    std::fs::create_dir_all(&cfg.output.dir).with_context(|| format!("creating {}", cfg.output.dir.display()))?;
    let stem = cfg.output.dir.join(&cfg.output.stem);
    let csv = stem.with_extension("csv");
    let artifact = stem.with_extension("json");
    let record_path = cfg.output.dir.join(format!("{}.record.json", cfg.output.stem));
    let started = unix_now();
    let clock = Instant::now();
    let metrics: serde_json::Value = with_pool(threads, || run_experiment(cfg, &csv, &artifact))??;
    let record = ResultRecord {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::from_str(&cfg.canonical()).map_err(anyhow::Error::from)?,
        started_unix: started,
        finished_unix: unix_now(),
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        metrics,
    };
    write_json(&record_path, &record)?;
    Ok(RunOutcome { csv, artifact, record: record_path, config_hash: record.config_hash })
}

fn run_experiment(cfg: &ExperimentConfig, csv: &Path, artifact: &Path) -> std::result::Result<serde_json::Value, Failure> {
    let missing = || Failure::Config(anyhow!("missing section for {:?}", cfg.experiment));
    match cfg.experiment {
        ExperimentKind::Prob => {
            let circuit = cfg.prob.as_ref().ok_or_else(missing)?;
            let p = circuit.probability()?;
            write_rows(csv, &[ProbRow { probability: p }])?;
            write_json(artifact, circuit)?;
            Ok(serde_json::json!({ "probability": p }))
        }
        ExperimentKind::LearnState => {
            let sec = cfg.learn_state.as_ref().ok_or_else(missing)?;
            let target = sec.target.build().config()?;
            let runs = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let mut run_cfg = sec.run.clone();
                    run_cfg.erm.es.seed = seed;
                    learn_state(&target, &sec.probes.with_seed(seed), &run_cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<LearnStateRow> = cfg.seeds.iter().zip(&runs).map(|(&s, r)| LearnStateRow::from_run(s, sec.run.samples, r)).collect();
            write_rows(csv, &rows)?;
            write_json(artifact, &runs)?;
            Ok(serde_json::to_value(&rows).map_err(anyhow::Error::from)?)
        }
        ExperimentKind::LearnTask => {
            let sec = cfg.learn_task.as_ref().ok_or_else(missing)?;
            let outs = cfg
                .seeds
                .iter()
                .map(|&seed| learn_task(&sec.task, &TaskConfig { seed, ..sec.run.clone() }, sec.grid))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<LearnTaskRow> = cfg.seeds.iter().zip(&outs).map(|(&s, o)| LearnTaskRow::from_outcome(s, o)).collect();
            write_rows(csv, &rows)?;
            write_json(artifact, &outs)?;
            Ok(serde_json::to_value(&rows).map_err(anyhow::Error::from)?)
        }
        ExperimentKind::Bound => {
            let sec = cfg.bound.as_ref().ok_or_else(missing)?;
            let rep = bound(sec.setting, &sec.params).config()?;
            write_rows(csv, &[BoundRow::from_report(&rep)])?;
            write_json(artifact, &rep)?;
            Ok(serde_json::to_value(&rep).map_err(anyhow::Error::from)?)
        }
        ExperimentKind::Dims => {
            let sec = cfg.dims.as_ref().ok_or_else(missing)?;
            function_class(&sec.class, sec.n, sec.k).config()?;
            let results = cfg.seeds.iter().map(|&seed| dims(sec, seed)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<&DimsSummary> = results.iter().map(|r| &r.1).collect();
            write_rows(csv, &rows)?;
            let certs: Vec<SeedMetric> = cfg
                .seeds
                .iter()
                .zip(&results)
                .map(|(&seed, r)| Ok(SeedMetric { seed, value: serde_json::to_value(&r.0)? }))
                .collect::<Result<_>>()?;
            write_json(artifact, &certs)?;
            Ok(serde_json::to_value(&rows).map_err(anyhow::Error::from)?)
        }
        ExperimentKind::Sweep => {
            let mut sc = cfg.sweep.clone().ok_or_else(missing)?;
            sc.seeds = cfg.seeds.clone();
            let res = sweep(&sc)?;
            let file = std::fs::File::create(csv).with_context(|| format!("writing {}", csv.display()))?;
            write_csv(&res.rows, file)?;
            let summary = serde_json::json!({
                "runs": res.rows.len(),
                "skipped": res.skipped,
                "scaling": res.scaling,
                "scaling_error": res.scaling_error,
            });
            write_json(artifact, &summary)?;
            Ok(summary)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnStateRow {
    pub seed: u64,
    pub samples: usize,
    pub eta: f64,
    pub mean_loss: f64,
    pub gap_mean: f64,
    pub gap_q50: f64,
    pub gap_q95: f64,
    pub evals: usize,
    pub wall_ms: f64,
}

impl LearnStateRow {
    pub fn from_run(seed: u64, samples: usize, r: &LearnRun) -> Self {
        Self {
            seed,
            samples,
            eta: r.report.eta,
            mean_loss: r.report.mean_loss,
            gap_mean: r.gap.mean,
            gap_q50: r.gap.q50,
            gap_q95: r.gap.q95,
            evals: r.report.evals,
            wall_ms: r.report.wall_ms,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnTaskRow {
    pub seed: u64,
    pub train_loss: f64,
    pub heldout_success: f64,
    pub support_success: Option<f64>,
    pub grid_success: Option<f64>,
    pub wall_ms: f64,
}

impl LearnTaskRow {
    pub fn from_outcome(seed: u64, o: &TaskOutcome) -> Self {
        Self {
            seed,
            train_loss: o.report.train_loss,
            heldout_success: o.report.heldout_success,
            support_success: o.support_success,
            grid_success: o.grid_success,
            wall_ms: o.report.wall_ms,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundRow {
    pub setting: String,
    pub t0: f64,
    pub dimension: f64,
    pub leading_term: f64,
}

impl BoundRow {
    pub fn from_report(r: &BoundReport) -> Self {
        Self {
            setting: serde_json::to_value(r.setting).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            t0: r.t0,
            dimension: r.dimension,
            leading_term: r.leading_term,
        }
    }
}

pub fn read_circuit(path: &Path) -> Result<CircuitSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}
